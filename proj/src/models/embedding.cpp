#include "pisa/models/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pisa/common/rng.hpp"
#include "pisa/nn/adam.hpp"
#include "pisa/nn/losses.hpp"
#include "pisa/nn/serialize.hpp"

namespace pisa::models {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

const std::vector<int> kPadOnly{data::Vocabulary::kPad};

std::span<const int> or_pad(std::span<const int> tokens) { return tokens.empty() ? std::span<const int>(kPadOnly) : tokens; }

std::vector<nn::Matrix> rows_as_steps(const nn::Matrix& m) {
  std::vector<nn::Matrix> steps;
  steps.reserve(static_cast<std::size_t>(m.rows()));
  for (nn::Index r = 0; r < m.rows(); ++r) steps.emplace_back(m.row(r));
  return steps;
}

}  // namespace

EmbeddingComponent::EmbeddingComponent(const EmbeddingDims& dims, data::Vocabulary vocab, std::uint64_t seed)
    : dims_(dims), vocab_(std::move(vocab)) {
  dims_.vocab_size = vocab_.size();
  if (dims_.categories < 2) throw ConfigError("embedding component: need at least 2 categories");
  if (dims_.word_dim < 1 || dims_.gru_hidden < 1 || dims_.embed_dim < 1)
    throw ConfigError("embedding component: dimensions must be positive");
  words_ = nn::Embedding("words.E", dims_.vocab_size, dims_.word_dim);
  gru_ = nn::Gru("gru", dims_.word_dim, dims_.gru_hidden);
  dense1_ = nn::Dense("dense_1", dims_.gru_hidden, dims_.embed_dim, nn::Activation::tanh);
  head_ = nn::Dense("softmax_head", dims_.embed_dim, dims_.categories, nn::Activation::identity);
  Rng rng = Rng(seed).split(kInitStream);
  words_.init(rng);
  gru_.init(rng);
  dense1_.init(rng);
  head_.init(rng);
}

void EmbeddingComponent::check_tokens(std::span<const int> tokens) const {
  for (const int t : tokens)
    if (t < 0 || t >= dims_.vocab_size)
      throw IndexError("embedding component: token " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(dims_.vocab_size));
}

nn::RowVector EmbeddingComponent::embed(std::span<const int> tokens) const {
  tokens = or_pad(tokens);
  check_tokens(tokens);
  const auto xs = rows_as_steps(words_.forward(tokens));
  const nn::Matrix h = gru_.forward(xs, nn::Matrix::Zero(1, dims_.gru_hidden));
  return dense1_.forward(h).row(0);
}

nn::Vector EmbeddingComponent::logits(std::span<const int> tokens) const {
  if (head_detached_) throw StateError("embedding component: softmax head has been detached");
  return head_.forward(nn::Matrix(embed(tokens))).row(0).transpose();
}

double EmbeddingComponent::accumulate_gradient(std::span<const int> tokens, int category_index, double weight) {
  if (frozen_) throw StateError("embedding component is frozen");
  if (head_detached_) throw StateError("embedding component: softmax head has been detached");
  tokens = or_pad(tokens);
  check_tokens(tokens);
  const auto xs = rows_as_steps(words_.forward(tokens));
  nn::GruCache gru_cache;
  nn::DenseCache dense_cache, head_cache;
  const nn::Matrix h = gru_.forward(xs, nn::Matrix::Zero(1, dims_.gru_hidden), &gru_cache);
  const nn::Matrix e = dense1_.forward(h, &dense_cache);
  const nn::Matrix z = head_.forward(e, &head_cache);
  const auto ce = nn::softmax_cross_entropy(z.row(0).transpose(), category_index);

  const nn::Matrix dz = weight * ce.grad_logits.transpose();
  const nn::Matrix de = head_.backward(dz, head_cache);
  const nn::Matrix dh = dense1_.backward(de, dense_cache);
  const auto dxs = gru_.backward(dh, gru_cache);
  nn::Matrix dx(static_cast<nn::Index>(dxs.size()), dims_.word_dim);
  for (std::size_t t = 0; t < dxs.size(); ++t) dx.row(static_cast<nn::Index>(t)) = dxs[t].row(0);
  words_.backward(tokens, dx);
  return ce.loss;
}

nn::ParamList EmbeddingComponent::parameters() {
  nn::ParamList out;
  for (auto* p : words_.parameters()) out.push_back(p);
  for (auto* p : gru_.parameters()) out.push_back(p);
  for (auto* p : dense1_.parameters()) out.push_back(p);
  if (!head_detached_)
    for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

void EmbeddingComponent::detach_head() { head_detached_ = true; }

nlohmann::json EmbeddingComponent::to_json() const {
  auto& self = const_cast<EmbeddingComponent&>(*this);
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["model_kind"] = to_string(ModelKind::embedding_component);
  j["dims"] = {{"categories", dims_.categories},
               {"embed_dim", dims_.embed_dim},
               {"gru_hidden", dims_.gru_hidden},
               {"vocab_size", dims_.vocab_size},
               {"word_dim", dims_.word_dim}};
  j["frozen"] = frozen_;
  j["head_detached"] = head_detached_;
  j["vocabulary"] = vocab_.corpus_words();
  j["params"] = nn::params_to_json(self.parameters());
  return j;
}

EmbeddingComponent EmbeddingComponent::from_json(const nlohmann::json& j) {
  if (j.value("format_version", -1) != kFormatVersion)
    throw DataError("embedding component: unsupported format_version");
  if (j.value("model_kind", std::string()) != to_string(ModelKind::embedding_component))
    throw DataError("model file kind is '" + j.value("model_kind", std::string("?")) +
                    "', expected 'embedding_component'");
  const auto& d = j.at("dims");
  EmbeddingDims dims{d.at("vocab_size").get<int>(), d.at("word_dim").get<int>(), d.at("gru_hidden").get<int>(),
                     d.at("embed_dim").get<int>(), d.at("categories").get<int>()};
  data::Vocabulary vocab(j.at("vocabulary").get<std::vector<std::string>>());
  if (vocab.size() != dims.vocab_size)
    throw DataError("embedding component: vocabulary has " + std::to_string(vocab.size()) + " entries, dims say " +
                    std::to_string(dims.vocab_size));
  EmbeddingComponent c(dims, std::move(vocab), 0);
  if (j.at("head_detached").get<bool>()) c.detach_head();
  nn::params_from_json(j.at("params"), c.parameters());
  if (j.at("frozen").get<bool>()) c.freeze();
  return c;
}

nn::RowVector embed_item(const EmbeddingComponent& component, const data::Item& item) {
  if (!component.frozen()) throw StateError("embed_item: embedding component must be frozen first");
  const auto text = data::item_text(item);
  return component.embed(text);
}

EmbeddingTrainResult train_embedding_component(std::span<const data::Item> items, const data::Vocabulary& vocab,
                                               EmbeddingDims dims, const TrainConfig& cfg) {
  cfg.validate();
  if (dims.categories < 2) throw ConfigError("train_embedding_component: need at least 2 categories");
  if (items.empty()) throw DataError("train_embedding_component: empty catalog");
  for (const auto& it : items)
    if (it.category < 1 || it.category > dims.categories)
      throw DataError("train_embedding_component: item " + std::to_string(data::raw(it.id)) + " has category " +
                      std::to_string(it.category) + " outside 1.." + std::to_string(dims.categories));

  EmbeddingTrainResult result{EmbeddingComponent(dims, vocab, cfg.seed), {}, 0, 0};
  EmbeddingComponent& model = result.component;
  const Rng root(cfg.seed);
  Rng split_rng = root.split(kSplitStream);
  Rng shuffle_rng = root.split(kShuffleStream);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  split_rng.shuffle(order);
  const std::size_t n_heldout = items.size() / 10;
  std::vector<std::size_t> heldout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_heldout));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_heldout), order.end());
  const std::vector<std::size_t>& selection_set = heldout.empty() ? train : heldout;
  result.heldout_items = n_heldout;

  std::vector<std::vector<int>> texts;
  texts.reserve(items.size());
  for (const auto& it : items) texts.push_back(data::item_text(it));

  nn::AdamConfig adam;
  adam.alpha = cfg.learning_rate;
  const nn::ParamList params = model.parameters();
  nn::zero_grads(params);

  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  std::vector<nn::Matrix> best = nn::snapshot(params);
  const auto B = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(train);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train.size(); start += B) {
      const std::size_t end = std::min(train.size(), start + B);
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = train[k];
        loss_sum += model.accumulate_gradient(texts[i], items[i].category - 1, w);
      }
      nn::adam_step(params, adam);
    }

    std::size_t correct = 0;
    double eval_loss = 0.0;
    for (const std::size_t i : selection_set) {
      const nn::Vector z = model.logits(texts[i]);
      nn::Index arg = 0;
      z.maxCoeff(&arg);
      if (arg == items[i].category - 1) ++correct;
      eval_loss += nn::softmax_cross_entropy(z, items[i].category - 1).loss;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(selection_set.size());
    eval_loss /= static_cast<double>(selection_set.size());
    result.trace.push_back(EmbeddingEpoch{epoch, loss_sum / static_cast<double>(train.size()), acc, eval_loss});
    if (acc > best_acc || (acc == best_acc && eval_loss < best_loss)) {
      best_acc = acc;
      best_loss = eval_loss;
      best = nn::snapshot(params);
      result.best_epoch = epoch;
    }
  }
  nn::restore(params, best);
  for (auto* p : params) p->reset_optimizer();
  model.detach_head();
  model.freeze();
  return result;
}

const nn::RowVector* ItemEmbeddingTable::find(data::ItemId id) const {
  const auto it = vectors_.find(id);
  return it == vectors_.end() ? nullptr : &it->second;
}

void ItemEmbeddingTable::insert(data::ItemId id, nn::RowVector v) {
  if (v.size() != dim_) throw ShapeError("item embedding table: vector length does not match table dimension");
  vectors_[id] = std::move(v);
}

nlohmann::json ItemEmbeddingTable::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [id, v] : vectors_) {
    nlohmann::json row = nlohmann::json::array();
    for (nn::Index k = 0; k < v.size(); ++k) row.push_back(v(k));
    items.push_back({{"id", data::raw(id)}, {"vector", std::move(row)}});
  }
  return {{"format_version", kFormatVersion}, {"kind", "item_embedding_table"}, {"dim", dim_}, {"items", items}};
}

ItemEmbeddingTable ItemEmbeddingTable::from_json(const nlohmann::json& j) {
  if (j.value("format_version", -1) != kFormatVersion) throw DataError("item embedding table: unsupported format_version");
  ItemEmbeddingTable t(j.at("dim").get<int>());
  for (const auto& e : j.at("items")) {
    const auto values = e.at("vector").get<std::vector<double>>();
    nn::RowVector v(static_cast<nn::Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) v(static_cast<nn::Index>(k)) = values[k];
    t.insert(data::ItemId{e.at("id").get<std::uint64_t>()}, std::move(v));
  }
  return t;
}

ItemEmbeddingTable build_embedding_table(const EmbeddingComponent& component, std::span<const data::Item> items) {
  ItemEmbeddingTable table(component.dims().embed_dim);
  for (const auto& it : items) table.insert(it.id, embed_item(component, it));
  return table;
}

ContentFeatures::ContentFeatures(std::shared_ptr<const EmbeddingComponent> component,
                                 std::shared_ptr<const ItemEmbeddingTable> table,
                                 std::span<const data::Item> catalog_items)
    : component_(std::move(component)), table_(std::move(table)) {
  if (!component_ || !table_) throw StateError("content features need a component and a table");
  if (table_->dim() != component_->dims().embed_dim)
    throw ShapeError("content features: table dimension does not match the embedding component");
  for (const auto& it : catalog_items) items_.emplace(it.id, it);
}

nn::RowVector ContentFeatures::vector(data::ItemId id) const {
  if (const auto* v = table_->find(id)) return *v;
  const auto it = items_.find(id);
  if (it != items_.end()) return embed_item(*component_, it->second);
  // Unknown to the catalog as well: no text, so the [PAD] text rule applies.
  return embed_item(*component_, data::Item{id, 1, {}, {}});
}

std::vector<data::Item> resolve_catalog(const data::Catalog& catalog, const data::Vocabulary& vocab) {
  std::vector<data::Item> out;
  out.reserve(catalog.size());
  for (const auto& r : catalog.records()) out.push_back(data::resolve_item(r, vocab));
  return out;
}

}  // namespace pisa::models
