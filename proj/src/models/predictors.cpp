#include "pisa/models/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pisa/common/errors.hpp"
#include "pisa/common/rng.hpp"
#include "pisa/data/sessions.hpp"
#include "pisa/nn/serialize.hpp"

namespace pisa::models {

namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::size_t kPredictBatch = 512;

template <typename Id>
void sort_unique(std::vector<Id>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Timestep t of a batch as a |rows| x dim matrix gathered from `table`.
nn::Matrix gather_step(const nn::Matrix& table, const std::vector<int>& lookup, std::size_t max_len,
                       std::span<const std::size_t> rows, std::size_t t) {
  nn::Matrix x(static_cast<nn::Index>(rows.size()), table.cols());
  for (std::size_t b = 0; b < rows.size(); ++b)
    x.row(static_cast<nn::Index>(b)) = table.row(lookup[rows[b] * max_len + t]);
  return x;
}

std::vector<nn::Matrix> content_steps(const EncodedSessions& batch, std::span<const std::size_t> rows) {
  std::vector<nn::Matrix> xs;
  xs.reserve(batch.max_len);
  for (std::size_t t = 0; t < batch.max_len; ++t)
    xs.push_back(gather_step(batch.features, batch.content_rows, batch.max_len, rows, t));
  return xs;
}

std::vector<std::vector<int>> id_steps(const EncodedSessions& batch, std::span<const std::size_t> rows) {
  std::vector<std::vector<int>> ids(batch.max_len, std::vector<int>(rows.size()));
  for (std::size_t t = 0; t < batch.max_len; ++t)
    for (std::size_t b = 0; b < rows.size(); ++b) ids[t][b] = batch.item_rows[rows[b] * batch.max_len + t];
  return ids;
}

nn::Vector as_vector(const nn::Matrix& column) { return column.col(0); }

nn::Matrix as_column(const nn::Vector& v) { return nn::Matrix(v); }

void validate_dims(const PredictorDims& d) {
  if (d.content_dim < 1 || d.id_dim < 1 || d.lstm_hidden < 1 || d.merge_dim < 1 || d.max_len < 1)
    throw ConfigError("predictor dimensions must be positive");
}

nn::ParamList concat(std::initializer_list<nn::ParamList> parts) {
  nn::ParamList out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double open_unit(double p) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// IdIndex

IdIndex::IdIndex(std::vector<data::ItemId> items, std::vector<data::UserId> users)
    : items_(std::move(items)), users_(std::move(users)) {
  sort_unique(items_);
  sort_unique(users_);
  for (std::size_t k = 0; k < items_.size(); ++k) item_lookup_.emplace(items_[k], static_cast<int>(k) + 2);
  for (std::size_t k = 0; k < users_.size(); ++k) user_lookup_.emplace(users_[k], static_cast<int>(k) + 1);
}

int IdIndex::item_row(std::optional<data::ItemId> id) const {
  if (!id) return kPadRow;
  const auto it = item_lookup_.find(*id);
  return it == item_lookup_.end() ? kUnknownItemRow : it->second;
}

int IdIndex::user_row(data::UserId id) const {
  const auto it = user_lookup_.find(id);
  return it == user_lookup_.end() ? kUnknownUserRow : it->second;
}

nlohmann::json IdIndex::to_json() const {
  nlohmann::json items = nlohmann::json::array(), users = nlohmann::json::array();
  for (const auto id : items_) items.push_back(data::raw(id));
  for (const auto id : users_) users.push_back(data::raw(id));
  return {{"items", items}, {"users", users}};
}

IdIndex IdIndex::from_json(const nlohmann::json& j) {
  std::vector<data::ItemId> items;
  std::vector<data::UserId> users;
  for (const auto& v : j.at("items")) items.push_back(data::ItemId{v.get<std::uint64_t>()});
  for (const auto& v : j.at("users")) users.push_back(data::UserId{v.get<std::uint64_t>()});
  return IdIndex(std::move(items), std::move(users));
}

IdIndex build_id_index(std::span<const data::Session> sessions, int min_user_sessions) {
  std::vector<data::ItemId> items;
  std::map<data::UserId, int> counts;
  for (const auto& s : sessions) {
    ++counts[s.user];
    for (const auto& c : s.clicks) items.push_back(c.item);
  }
  std::vector<data::UserId> users;
  for (const auto& [u, n] : counts)
    if (n >= min_user_sessions) users.push_back(u);
  return IdIndex(std::move(items), std::move(users));
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

EncodedSessions encode_slots(std::span<const data::PaddedSequence> seqs, std::span<const data::UserId> users,
                             std::span<const int> labels, const ContentFeatures* features, const IdIndex* ids,
                             std::size_t max_len) {
  EncodedSessions e;
  e.max_len = max_len;
  e.labels.assign(labels.begin(), labels.end());
  const std::size_t n = seqs.size();
  if (features) {
    std::map<data::ItemId, int> rows;
    e.content_rows.assign(n * max_len, 0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < max_len; ++t)
        if (const auto& slot = seqs[s].slots[t]) {
          const auto [it, fresh] = rows.emplace(*slot, static_cast<int>(rows.size()) + 1);
          e.content_rows[s * max_len + t] = it->second;
        }
    e.features = nn::Matrix::Zero(static_cast<nn::Index>(rows.size()) + 1, features->dim());
    for (const auto& [id, r] : rows) e.features.row(r) = features->vector(id);
  }
  if (ids) {
    e.item_rows.assign(n * max_len, IdIndex::kPadRow);
    e.user_rows.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      e.user_rows[s] = ids->user_row(users[s]);
      for (std::size_t t = 0; t < max_len; ++t) e.item_rows[s * max_len + t] = ids->item_row(seqs[s].slots[t]);
    }
  }
  return e;
}

}  // namespace

EncodedSessions encode_sessions(std::span<const data::Session> sessions, const ContentFeatures* features,
                                const IdIndex* ids, std::size_t max_len) {
  std::vector<data::PaddedSequence> seqs;
  std::vector<data::UserId> users;
  std::vector<int> labels;
  seqs.reserve(sessions.size());
  for (const auto& s : sessions) {
    seqs.push_back(data::pad_or_prune(s.clicks, max_len));
    users.push_back(s.user);
    labels.push_back(s.label);
  }
  return encode_slots(seqs, users, labels, features, ids, max_len);
}

EncodedSessions encode_padded(std::span<const data::PaddedSequence> sequences, std::span<const data::UserId> users,
                              const ContentFeatures* features, const IdIndex* ids) {
  if (sequences.size() != users.size()) throw ShapeError("encode_padded: one user per sequence required");
  const std::size_t max_len = sequences.empty() ? 0 : sequences.front().slots.size();
  for (const auto& s : sequences)
    if (s.slots.size() != max_len) throw ShapeError("encode_padded: sequences differ in length");
  const std::vector<int> labels(sequences.size(), 0);
  return encode_slots(sequences, users, labels, features, ids, max_len);
}

// ---------------------------------------------------------------------------
// SessionPredictor

SessionPredictor::SessionPredictor(const PredictorDims& dims) : dims_(dims) { validate_dims(dims_); }

void SessionPredictor::check_batch(const EncodedSessions& batch, std::span<const std::size_t> rows) const {
  if (batch.max_len != static_cast<std::size_t>(dims_.max_len))
    throw ShapeError("sequence length " + std::to_string(batch.max_len) + " does not match model max_len " +
                     std::to_string(dims_.max_len));
  const std::size_t n = batch.size();
  if (uses_content()) {
    if (batch.content_rows.size() != n * batch.max_len)
      throw ShapeError(to_string(kind()) + " model needs content features");
    if (batch.features.cols() != dims_.content_dim)
      throw ShapeError("item vectors have length " + std::to_string(batch.features.cols()) + ", model expects " +
                       std::to_string(dims_.content_dim));
  }
  if (id_index() && (batch.item_rows.size() != n * batch.max_len || batch.user_rows.size() != n))
    throw ShapeError(to_string(kind()) + " model needs id rows");
  for (const auto r : rows)
    if (r >= n) throw IndexError("batch row " + std::to_string(r) + " out of range");
}

nlohmann::json SessionPredictor::to_json() const {
  auto& self = const_cast<SessionPredictor&>(*this);
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["model_kind"] = to_string(kind());
  j["dims"] = {{"content_dim", dims_.content_dim}, {"id_dim", dims_.id_dim}, {"lstm_hidden", dims_.lstm_hidden},
               {"max_len", dims_.max_len},         {"merge_dim", dims_.merge_dim}};
  if (const auto* ids = id_index()) j["id_index"] = ids->to_json();
  j["params"] = nn::params_to_json(self.parameters());
  return j;
}

// ---------------------------------------------------------------------------
// ContentPredictor

ContentPredictor::ContentPredictor(const PredictorDims& dims, std::uint64_t seed)
    : SessionPredictor(dims),
      lstm_("lstm", dims.content_dim, dims.lstm_hidden),
      out_("output", dims.lstm_hidden, 1, nn::Activation::identity) {
  Rng rng = Rng(seed).split(kInitStream);
  lstm_.init(rng);
  out_.init(rng);
}

nn::Vector ContentPredictor::run(const EncodedSessions& batch, std::span<const std::size_t> rows, Cache* cache) const {
  check_batch(batch, rows);
  const auto xs = content_steps(batch, rows);
  const auto state = lstm_.forward(xs, lstm_.zero_state(static_cast<nn::Index>(rows.size())),
                                   cache ? &cache->lstm : nullptr);
  return as_vector(out_.forward(state.h, cache ? &cache->out : nullptr));
}

nn::Vector ContentPredictor::logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const {
  return run(batch, rows, nullptr);
}

nn::Vector ContentPredictor::forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) {
  cache_.emplace();
  return run(batch, rows, &*cache_);
}

void ContentPredictor::backward(const nn::Vector& dlogits) {
  if (!cache_) throw StateError("content predictor: backward without forward_train");
  const nn::Matrix dh = out_.backward(as_column(dlogits), cache_->out);
  lstm_.backward(dh, cache_->lstm);
  cache_.reset();
}

nn::ParamList ContentPredictor::parameters() { return concat({lstm_.parameters(), out_.parameters()}); }

// ---------------------------------------------------------------------------
// BaselinePredictor

BaselinePredictor::BaselinePredictor(const PredictorDims& dims, IdIndex ids, std::uint64_t seed)
    : SessionPredictor(dims),
      ids_(std::move(ids)),
      items_("item_embedding.E", ids_.item_rows(), dims.id_dim),
      lstm_("lstm", dims.id_dim, dims.lstm_hidden),
      out_("output", dims.lstm_hidden, 1, nn::Activation::identity) {
  Rng rng = Rng(seed).split(kInitStream);
  items_.init(rng);
  lstm_.init(rng);
  out_.init(rng);
}

nn::Vector BaselinePredictor::run(const EncodedSessions& batch, std::span<const std::size_t> rows, Cache* cache) const {
  check_batch(batch, rows);
  auto ids = id_steps(batch, rows);
  std::vector<nn::Matrix> xs;
  xs.reserve(ids.size());
  for (const auto& step : ids) xs.push_back(items_.forward(step));
  const auto state = lstm_.forward(xs, lstm_.zero_state(static_cast<nn::Index>(rows.size())),
                                   cache ? &cache->lstm : nullptr);
  if (cache) cache->ids = std::move(ids);
  return as_vector(out_.forward(state.h, cache ? &cache->out : nullptr));
}

nn::Vector BaselinePredictor::logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const {
  return run(batch, rows, nullptr);
}

nn::Vector BaselinePredictor::forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) {
  cache_.emplace();
  return run(batch, rows, &*cache_);
}

void BaselinePredictor::backward(const nn::Vector& dlogits) {
  if (!cache_) throw StateError("baseline predictor: backward without forward_train");
  const nn::Matrix dh = out_.backward(as_column(dlogits), cache_->out);
  const auto dxs = lstm_.backward(dh, cache_->lstm);
  for (std::size_t t = 0; t < dxs.size(); ++t) items_.backward(cache_->ids[t], dxs[t]);
  cache_.reset();
}

nn::ParamList BaselinePredictor::parameters() {
  return concat({items_.parameters(), lstm_.parameters(), out_.parameters()});
}

// ---------------------------------------------------------------------------
// IntegratedPredictor

IntegratedPredictor::IntegratedPredictor(const PredictorDims& dims, IdIndex ids, std::uint64_t seed)
    : SessionPredictor(dims),
      ids_(std::move(ids)),
      content_lstm_("content_lstm", dims.content_dim, dims.lstm_hidden),
      items_("item_embedding.E", ids_.item_rows(), dims.id_dim),
      users_("user_embedding.E", ids_.user_rows(), dims.id_dim),
      id_lstm_("id_lstm", dims.id_dim, dims.lstm_hidden),
      merge_("merge", 2 * dims.lstm_hidden, dims.merge_dim, nn::Activation::tanh),
      out_("output", dims.merge_dim, 1, nn::Activation::identity) {
  Rng rng = Rng(seed).split(kInitStream);
  content_lstm_.init(rng);
  items_.init(rng);
  users_.init(rng);
  id_lstm_.init(rng);
  merge_.init(rng);
  out_.init(rng);
}

nn::Vector IntegratedPredictor::run(const EncodedSessions& batch, std::span<const std::size_t> rows,
                                    Cache* cache) const {
  check_batch(batch, rows);
  const auto B = static_cast<nn::Index>(rows.size());
  const auto H = static_cast<nn::Index>(dims_.lstm_hidden);

  const auto cxs = content_steps(batch, rows);
  const auto hc = content_lstm_.forward(cxs, content_lstm_.zero_state(B), cache ? &cache->content_lstm : nullptr).h;

  std::vector<int> users(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) users[b] = batch.user_rows[rows[b]];
  auto ids = id_steps(batch, rows);
  std::vector<nn::Matrix> ixs;
  ixs.reserve(ids.size() + 1);
  ixs.push_back(users_.forward(users));
  for (const auto& step : ids) ixs.push_back(items_.forward(step));
  const auto hi = id_lstm_.forward(ixs, id_lstm_.zero_state(B), cache ? &cache->id_lstm : nullptr).h;

  nn::Matrix joined(B, 2 * H);
  joined.leftCols(H) = hc;
  joined.rightCols(H) = hi;
  const nn::Matrix m = merge_.forward(joined, cache ? &cache->merge : nullptr);
  if (cache) {
    cache->users = std::move(users);
    cache->ids = std::move(ids);
  }
  return as_vector(out_.forward(m, cache ? &cache->out : nullptr));
}

nn::Vector IntegratedPredictor::logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const {
  return run(batch, rows, nullptr);
}

nn::Vector IntegratedPredictor::forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) {
  cache_.emplace();
  return run(batch, rows, &*cache_);
}

void IntegratedPredictor::backward(const nn::Vector& dlogits) {
  if (!cache_) throw StateError("integrated predictor: backward without forward_train");
  const auto H = static_cast<nn::Index>(dims_.lstm_hidden);
  const nn::Matrix dm = out_.backward(as_column(dlogits), cache_->out);
  const nn::Matrix djoined = merge_.backward(dm, cache_->merge);
  content_lstm_.backward(djoined.leftCols(H), cache_->content_lstm);
  const auto dxs = id_lstm_.backward(djoined.rightCols(H), cache_->id_lstm);
  users_.backward(cache_->users, dxs[0]);
  for (std::size_t t = 1; t < dxs.size(); ++t) items_.backward(cache_->ids[t - 1], dxs[t]);
  cache_.reset();
}

nn::ParamList IntegratedPredictor::parameters() {
  return concat({content_lstm_.parameters(), items_.parameters(), users_.parameters(), id_lstm_.parameters(),
                 merge_.parameters(), out_.parameters()});
}

// ---------------------------------------------------------------------------

std::unique_ptr<SessionPredictor> make_predictor(ModelKind kind, const PredictorDims& dims, const IdIndex& ids,
                                                 std::uint64_t seed) {
  switch (kind) {
    case ModelKind::content:
      return std::make_unique<ContentPredictor>(dims, seed);
    case ModelKind::baseline:
      return std::make_unique<BaselinePredictor>(dims, ids, seed);
    case ModelKind::integrated:
      return std::make_unique<IntegratedPredictor>(dims, ids, seed);
    case ModelKind::embedding_component:
      break;
  }
  throw ConfigError("make_predictor: '" + to_string(kind) + "' is not a session predictor");
}

std::unique_ptr<SessionPredictor> load_predictor(const nlohmann::json& j, std::optional<ModelKind> expected) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw DataError("model file format_version " + j.at("format_version").dump() + " is not supported");
    const std::string kind_name = j.at("model_kind").get<std::string>();
    ModelKind kind;
    try {
      kind = parse_model_kind(kind_name);
    } catch (const ConfigError&) {
      throw DataError("model file has unknown model_kind '" + kind_name + "'");
    }
    if (expected && kind != *expected)
      throw DataError("model file kind is '" + kind_name + "', expected '" + to_string(*expected) + "'");
    if (kind == ModelKind::embedding_component)
      throw DataError("model file holds an embedding component, not a session predictor");
    const auto& d = j.at("dims");
    PredictorDims dims{d.at("content_dim").get<int>(), d.at("id_dim").get<int>(), d.at("lstm_hidden").get<int>(),
                       d.at("merge_dim").get<int>(), d.at("max_len").get<int>()};
    const IdIndex ids = kind == ModelKind::content ? IdIndex() : IdIndex::from_json(j.at("id_index"));
    auto model = make_predictor(kind, dims, ids, 0);
    nn::params_from_json(j.at("params"), model->parameters());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

std::vector<double> predict(const SessionPredictor& model, const EncodedSessions& encoded) {
  std::vector<double> out;
  out.reserve(encoded.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < encoded.size(); start += kPredictBatch) {
    const std::size_t end = std::min(encoded.size(), start + kPredictBatch);
    rows.resize(end - start);
    for (std::size_t k = start; k < end; ++k) rows[k - start] = k;
    const nn::Vector z = model.logits(encoded, rows);
    for (nn::Index k = 0; k < z.size(); ++k) {
      if (!std::isfinite(z(k))) throw NumericError("non-finite logit for session row " + std::to_string(start + k));
      out.push_back(open_unit(nn::sigmoid(z(k))));
    }
  }
  return out;
}

double predict_session(const SessionPredictor& model, const data::PaddedSequence& padded,
                       const ContentFeatures* features, data::UserId user) {
  if (padded.slots.size() != static_cast<std::size_t>(model.dims().max_len))
    throw ShapeError("padded sequence has length " + std::to_string(padded.slots.size()) + ", model expects " +
                     std::to_string(model.dims().max_len));
  if (model.uses_content() && !features) throw StateError(to_string(model.kind()) + " model needs content features");
  const EncodedSessions e = encode_padded(std::span(&padded, 1), std::span(&user, 1),
                                          model.uses_content() ? features : nullptr, model.id_index());
  return predict(model, e).front();
}

std::vector<double> predict(const SessionPredictor& model, std::span<const data::Session> sessions,
                            const ContentFeatures* features) {
  if (model.uses_content() && !features) throw StateError(to_string(model.kind()) + " model needs content features");
  const EncodedSessions e = encode_sessions(sessions, model.uses_content() ? features : nullptr, model.id_index(),
                                            static_cast<std::size_t>(model.dims().max_len));
  return predict(model, e);
}

}  // namespace pisa::models
