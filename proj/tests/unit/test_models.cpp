#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pisa/common/errors.hpp"
#include "pisa/data/sessions.hpp"
#include "pisa/data/text.hpp"
#include "pisa/metrics/metrics.hpp"
#include "pisa/models/embedding.hpp"
#include "pisa/models/predictors.hpp"
#include "pisa/models/training.hpp"
#include "pisa/nn/grad_check.hpp"
#include "pisa/nn/losses.hpp"
#include "pisa/nn/serialize.hpp"
#include "pisa/synth/generator.hpp"

using namespace pisa;
using namespace pisa::models;
using data::ItemId;
using data::UserId;

namespace {

data::Vocabulary tiny_vocab() {
  return data::build_vocabulary(std::vector<std::string>{"red shoe leather boot", "blue shirt cotton", "pan steel"});
}

EmbeddingDims tiny_embedding_dims() { return {0, 4, 5, 3, 3}; }

PredictorDims tiny_predictor_dims() { return {3, 3, 4, 3, 4}; }

data::Item make_item(std::uint64_t id, int category, std::vector<int> title, std::vector<int> desc) {
  return data::Item{ItemId{id}, category, std::move(title), std::move(desc)};
}

oracle::Mat param(const nlohmann::json& params, const std::string& name) {
  return oracle::to_mat(nn::matrix_from_json(params.at(name)));
}

oracle::Lstm lstm_oracle(const nlohmann::json& p, const std::string& prefix) {
  auto v = [&](const char* n) { return param(p, prefix + n)[0]; };
  return {param(p, prefix + ".W_i"), param(p, prefix + ".W_f"), param(p, prefix + ".W_o"), param(p, prefix + ".W_g"),
          param(p, prefix + ".U_i"), param(p, prefix + ".U_f"), param(p, prefix + ".U_o"), param(p, prefix + ".U_g"),
          v(".b_i"),                 v(".b_f"),                 v(".b_o"),                 v(".b_g")};
}

// Random content features, ids and labels for n sessions of length L.
EncodedSessions random_batch(std::size_t n, const PredictorDims& d, int item_rows, int user_rows, Rng& rng) {
  EncodedSessions e;
  e.max_len = static_cast<std::size_t>(d.max_len);
  const int n_features = 6;
  e.features = nn::Matrix::Zero(n_features + 1, d.content_dim);
  for (int r = 1; r <= n_features; ++r)
    for (int c = 0; c < d.content_dim; ++c) e.features(r, c) = rng.uniform(-1, 1);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t pad = rng.below(e.max_len);
    for (std::size_t t = 0; t < e.max_len; ++t) {
      const bool is_pad = t < pad;
      e.content_rows.push_back(is_pad ? 0 : 1 + static_cast<int>(rng.below(n_features)));
      e.item_rows.push_back(is_pad ? 0 : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(item_rows - 1))));
    }
    e.user_rows.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(user_rows))));
    e.labels.push_back(static_cast<int>(s % 2));
  }
  return e;
}

double batch_loss(SessionPredictor& m, const EncodedSessions& e, bool with_grad) {
  std::vector<std::size_t> rows(e.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
  const nn::Vector z = with_grad ? m.forward_train(e, rows) : m.logits(e, rows);
  nn::Vector dz(z.size());
  double loss = 0.0;
  for (nn::Index k = 0; k < z.size(); ++k) {
    const auto l = nn::sigmoid_bce(z(k), e.labels[static_cast<std::size_t>(k)]);
    loss += l.loss;
    dz(k) = l.grad_logit;
  }
  if (with_grad) m.backward(dz);
  return loss;
}

}  // namespace

TEST_CASE("embedding component gradients pass grad_check") {
  const auto vocab = tiny_vocab();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    EmbeddingComponent c(tiny_embedding_dims(), vocab, seed);
    const std::vector<std::vector<int>> texts{{2, 3, 4}, {5, 2}, {7, 8, 9, 2}};
    const std::vector<int> cats{0, 1, 2};
    auto loss = [&](bool grad) {
      double total = 0.0;
      for (std::size_t k = 0; k < texts.size(); ++k)
        total += grad ? c.accumulate_gradient(texts[k], cats[k], 1.0)
                      : nn::softmax_cross_entropy(c.logits(texts[k]), cats[k]).loss;
      return total;
    };
    CHECK(nn::grad_check(loss, c.parameters()).max_relative_error < 1e-4);
  }
}

TEST_CASE("embed_item equals a hand-unrolled GRU and tanh dense layer") {
  const auto vocab = tiny_vocab();
  EmbeddingComponent c(tiny_embedding_dims(), vocab, 5);
  c.detach_head();
  c.freeze();
  const auto item = make_item(1, 1, {2, 3}, {4, 2});
  const nn::RowVector got = embed_item(c, item);

  const auto p = c.to_json().at("params");
  const auto E = param(p, "words.E");
  oracle::Gru g{param(p, "gru.W_z"), param(p, "gru.W_r"), param(p, "gru.W_h"), param(p, "gru.U_z"),
                param(p, "gru.U_r"), param(p, "gru.U_h"), param(p, "gru.b_z")[0], param(p, "gru.b_r")[0],
                param(p, "gru.b_h")[0]};
  oracle::Vec h(5, 0.0);
  for (const int tok : {2, 3, 4, 2}) h = g.step(E[static_cast<std::size_t>(tok)], h);
  auto y = oracle::affine(param(p, "dense_1.W"), h, param(p, "dense_1.b")[0]);
  REQUIRE(got.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(got(static_cast<nn::Index>(i)) == doctest::Approx(std::tanh(y[i])).epsilon(1e-13));
}

TEST_CASE("embed_item depends on text only") {
  const auto vocab = tiny_vocab();
  EmbeddingComponent c(tiny_embedding_dims(), vocab, 5);
  CHECK_THROWS_AS(embed_item(c, make_item(1, 1, {2}, {})), StateError);
  c.detach_head();
  c.freeze();
  const auto a = make_item(1, 1, {2, 3}, {4});
  const auto b = make_item(99, 3, {2, 3}, {4});
  CHECK((embed_item(c, a).array() == embed_item(c, a).array()).all());
  CHECK((embed_item(c, a).array() == embed_item(c, b).array()).all());
  // empty text behaves like [PAD]
  CHECK((embed_item(c, make_item(2, 1, {}, {})).array() == embed_item(c, make_item(3, 1, {0}, {})).array()).all());
  CHECK_THROWS_AS(c.accumulate_gradient(std::vector<int>{2}, 0, 1.0), StateError);
  CHECK_THROWS_AS(c.logits(std::vector<int>{2}), StateError);
  CHECK_THROWS_AS(c.embed(std::vector<int>{vocab.size()}), IndexError);
}

TEST_CASE("embedding component training") {
  SUBCASE("planted catalog reaches high held-out category accuracy") {
    const auto sc = synth::generate_catalog(synth::GeneratorConfig{});
    const auto vocab = data::build_vocabulary(sc.catalog);
    const auto items = resolve_catalog(sc.catalog, vocab);
    const auto r = train_embedding_component(items, vocab, EmbeddingDims{}, TrainConfig{20, 16, 0.001, 1});
    CHECK(r.heldout_items == 26);
    const auto& best = r.trace[static_cast<std::size_t>(r.best_epoch - 1)];
    CHECK(best.heldout_accuracy >= 0.95);
    for (const auto& e : r.trace) CHECK(e.heldout_accuracy <= best.heldout_accuracy);
    CHECK(r.component.frozen());
    CHECK(r.component.head_detached());
  }
  SUBCASE("a single item is memorized") {
    const auto vocab = tiny_vocab();
    const std::vector<data::Item> one{make_item(1, 2, {2, 3}, {4})};
    const auto r = train_embedding_component(one, vocab, {0, 8, 8, 6, 3}, TrainConfig{200, 1, 0.01, 1});
    CHECK(r.trace.back().train_loss < 1e-2);
    CHECK(r.trace.back().train_loss < r.trace.front().train_loss / 100.0);
    for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].train_loss <= r.trace[k - 1].train_loss);
  }
  SUBCASE("errors") {
    const auto vocab = tiny_vocab();
    const std::vector<data::Item> items{make_item(1, 1, {2}, {})};
    CHECK_THROWS_AS(train_embedding_component(items, vocab, {0, 4, 4, 4, 1}, TrainConfig{}), ConfigError);
    CHECK_THROWS_AS(train_embedding_component({}, vocab, tiny_embedding_dims(), TrainConfig{}), DataError);
    const std::vector<data::Item> bad{make_item(1, 4, {2}, {})};
    CHECK_THROWS_AS(train_embedding_component(bad, vocab, tiny_embedding_dims(), TrainConfig{}), DataError);
  }
}

TEST_CASE("embedding component and item table serialize bit-exactly") {
  const auto vocab = tiny_vocab();
  EmbeddingComponent c(tiny_embedding_dims(), vocab, 8);
  c.detach_head();
  c.freeze();
  const auto back = EmbeddingComponent::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json().dump() == c.to_json().dump());
  CHECK(back.frozen());
  CHECK(back.vocabulary().corpus_words() == vocab.corpus_words());

  std::vector<data::Item> items;
  for (std::uint64_t k = 1; k <= 100; ++k)
    items.push_back(make_item(k, 1, {static_cast<int>(2 + k % 7)}, {static_cast<int>(2 + (k * 3) % 8)}));
  const auto table = build_embedding_table(c, items);
  CHECK(table.size() == items.size());
  CHECK(table.pad_vector().isZero(0.0));
  for (const auto& it : items) CHECK(*table.find(it.id) == embed_item(c, it));
  const auto t2 = ItemEmbeddingTable::from_json(nlohmann::json::parse(table.to_json().dump()));
  for (const auto& [id, v] : table.entries()) CHECK(*t2.find(id) == v);

  auto wrong_kind = c.to_json();
  wrong_kind["model_kind"] = "content";
  CHECK_THROWS_AS(EmbeddingComponent::from_json(wrong_kind), DataError);
  auto wrong_version = c.to_json();
  wrong_version["format_version"] = 2;
  CHECK_THROWS_AS(EmbeddingComponent::from_json(wrong_version), DataError);
}

TEST_CASE("content features embed items missing from the table on demand") {
  const auto vocab = tiny_vocab();
  auto c = std::make_shared<EmbeddingComponent>(tiny_embedding_dims(), vocab, 8);
  c->detach_head();
  c->freeze();
  const std::vector<data::Item> items{make_item(1, 1, {2}, {3}), make_item(2, 2, {4}, {5})};
  const std::vector<data::Item> first{items[0]};
  auto table = std::make_shared<ItemEmbeddingTable>(build_embedding_table(*c, first));
  const ContentFeatures f(c, table, items);
  CHECK(f.vector(ItemId{2}) == embed_item(*c, items[1]));
  CHECK(f.vector(ItemId{1}) == *table->find(ItemId{1}));
  CHECK(f.vector(ItemId{77}) == embed_item(*c, make_item(77, 1, {}, {})));
}

TEST_CASE("id index reserves PAD and UNKNOWN rows") {
  std::vector<data::Session> sessions(3);
  sessions[0].user = UserId{5};
  sessions[0].clicks = {{ItemId{30}, 0, UserId{5}}, {ItemId{10}, 1, UserId{5}}};
  sessions[1].user = UserId{5};
  sessions[1].clicks = {{ItemId{20}, 2, UserId{5}}};
  sessions[2].user = UserId{6};
  sessions[2].clicks = {{ItemId{10}, 3, UserId{6}}};
  const auto ids = build_id_index(sessions);
  CHECK(ids.item_rows() == 5);
  CHECK(ids.item_row(std::nullopt) == IdIndex::kPadRow);
  CHECK(ids.item_row(ItemId{10}) == 2);
  CHECK(ids.item_row(ItemId{30}) == 4);
  CHECK(ids.item_row(ItemId{99}) == IdIndex::kUnknownItemRow);
  CHECK(ids.user_rows() == 2);  // only user 5 has two sessions
  CHECK(ids.user_row(UserId{5}) == 1);
  CHECK(ids.user_row(UserId{6}) == IdIndex::kUnknownUserRow);
  CHECK(build_id_index(sessions, 1).user_rows() == 3);
  CHECK(IdIndex::from_json(ids.to_json()) == ids);
}

TEST_CASE("predictor gradients pass grad_check") {
  Rng rng(31);
  const auto d = tiny_predictor_dims();
  std::vector<ItemId> items;
  for (std::uint64_t k = 1; k <= 5; ++k) items.push_back(ItemId{k});
  const IdIndex ids(items, {UserId{1}, UserId{2}});
  for (const auto kind : {ModelKind::content, ModelKind::baseline, ModelKind::integrated}) {
    auto m = make_predictor(kind, d, ids, 3);
    const auto batch = random_batch(5, d, ids.item_rows(), ids.user_rows(), rng);
    auto loss = [&](bool grad) { return batch_loss(*m, batch, grad); };
    const auto r = nn::grad_check(loss, m->parameters());
    INFO(to_string(kind), " worst ", r.worst_param, " analytic ", r.worst_analytic, " numeric ", r.worst_numeric);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("backward without forward_train is a state error") {
  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}}, {});
  for (const auto kind : {ModelKind::content, ModelKind::baseline, ModelKind::integrated}) {
    auto m = make_predictor(kind, d, ids, 3);
    CHECK_THROWS_AS(m->backward(nn::Vector::Zero(1)), StateError);
  }
}

TEST_CASE("content predictor matches a scalar LSTM on a 3-item session") {
  const auto vocab = tiny_vocab();
  auto c = std::make_shared<EmbeddingComponent>(tiny_embedding_dims(), vocab, 8);
  c->detach_head();
  c->freeze();
  const std::vector<data::Item> items{make_item(1, 1, {2}, {3}), make_item(2, 2, {4}, {5}),
                                      make_item(3, 3, {6, 7}, {})};
  auto table = std::make_shared<ItemEmbeddingTable>(build_embedding_table(*c, items));
  const ContentFeatures f(c, table, items);
  const auto d = tiny_predictor_dims();
  const auto m = make_predictor(ModelKind::content, d, IdIndex{}, 4);
  data::PaddedSequence seq;
  seq.slots = {std::nullopt, ItemId{2}, ItemId{1}, ItemId{3}};
  seq.original_length = 3;
  const double p = predict_session(*m, seq, &f, UserId{1});

  const auto params = m->to_json().at("params");
  const auto lstm = lstm_oracle(params, "lstm");
  oracle::Vec h(4, 0.0), cell(4, 0.0);
  for (const auto& slot : seq.slots) {
    const oracle::Vec x = slot ? oracle::row(nn::Matrix(f.vector(*slot)), 0) : oracle::Vec(3, 0.0);
    std::tie(h, cell) = lstm.step(x, h, cell);
  }
  const double z = oracle::affine(param(params, "output.W"), h, param(params, "output.b")[0])[0];
  CHECK(p == doctest::Approx(oracle::sigm(z)).epsilon(1e-13));

  data::PaddedSequence all_pad;
  all_pad.slots.assign(4, std::nullopt);
  const double q = predict_session(*m, all_pad, &f, UserId{1});
  CHECK(q > 0.0);
  CHECK(q < 1.0);
  oracle::Vec h0(4, 0.0), c0(4, 0.0);
  for (int t = 0; t < 4; ++t) std::tie(h0, c0) = lstm.step(oracle::Vec(3, 0.0), h0, c0);
  CHECK(q == doctest::Approx(oracle::sigm(oracle::affine(param(params, "output.W"), h0, param(params, "output.b")[0])[0])));

  data::PaddedSequence wrong;
  wrong.slots.assign(5, std::nullopt);
  CHECK_THROWS_AS(predict_session(*m, wrong, &f, UserId{1}), ShapeError);
}

TEST_CASE("predictions survive a reload and probabilities stay inside (0, 1)") {
  Rng rng(41);
  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}, ItemId{2}, ItemId{3}}, {UserId{1}});
  for (const auto kind : {ModelKind::content, ModelKind::baseline, ModelKind::integrated}) {
    auto m = make_predictor(kind, d, ids, 9);
    const auto batch = random_batch(20, d, ids.item_rows(), ids.user_rows(), rng);
    const auto text = m->to_json().dump();
    const auto back = load_predictor(nlohmann::json::parse(text), kind);
    CHECK(predict(*m, batch) == predict(*back, batch));
    CHECK(back->to_json().dump() == text);

    // huge output weights push logits far past the double-precision sigmoid range
    auto params = m->parameters();
    for (auto* p : params)
      if (p->name == "output.b") p->value.setConstant(1e6);
    for (const double v : predict(*m, batch)) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("model loaders reject mismatched files") {
  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}}, {});
  const auto j = make_predictor(ModelKind::baseline, d, ids, 1)->to_json();
  CHECK_THROWS_AS(load_predictor(j, ModelKind::content), DataError);
  auto v = j;
  v["format_version"] = 7;
  CHECK_THROWS_AS(load_predictor(v), DataError);
  auto k = j;
  k["model_kind"] = "item2vec";
  CHECK_THROWS_AS(load_predictor(k), DataError);
  auto s = j;
  s["dims"]["lstm_hidden"] = 5;
  CHECK_THROWS_AS(load_predictor(s), DataError);
  auto ix = j;
  ix["id_index"]["items"].push_back(2);
  CHECK_THROWS_AS(load_predictor(ix), DataError);
}

TEST_CASE("baseline ignores item text") {
  const auto vocab = tiny_vocab();
  auto c = std::make_shared<EmbeddingComponent>(tiny_embedding_dims(), vocab, 8);
  c->detach_head();
  c->freeze();
  std::vector<data::Item> items{make_item(1, 1, {2}, {3}), make_item(2, 2, {4}, {5})};
  auto table = std::make_shared<ItemEmbeddingTable>(build_embedding_table(*c, items));
  const ContentFeatures f1(c, table, items);
  items[0].title_tokens = {9, 9, 9};
  auto table2 = std::make_shared<ItemEmbeddingTable>(build_embedding_table(*c, items));
  const ContentFeatures f2(c, table2, items);
  REQUIRE(!(f1.vector(ItemId{1}) == f2.vector(ItemId{1})));

  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}, ItemId{2}}, {});
  const auto base = make_predictor(ModelKind::baseline, d, ids, 2);
  const auto content = make_predictor(ModelKind::content, d, ids, 2);
  data::PaddedSequence seq;
  seq.slots = {std::nullopt, ItemId{1}, ItemId{2}, ItemId{1}};
  CHECK(predict_session(*base, seq, &f1, UserId{1}) == predict_session(*base, seq, &f2, UserId{1}));
  CHECK(predict_session(*content, seq, &f1, UserId{1}) != predict_session(*content, seq, &f2, UserId{1}));
}

TEST_CASE("integrated model concatenates the content branch before the id branch") {
  Rng rng(43);
  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}, ItemId{2}, ItemId{3}}, {UserId{1}});
  auto m = make_predictor(ModelKind::integrated, d, ids, 5);
  const auto j = m->to_json();
  const auto merge = nn::matrix_from_json(j.at("params").at("merge.W"));
  CHECK(merge.rows() == d.merge_dim);
  CHECK(merge.cols() == 2 * d.lstm_hidden);
  CHECK(nn::matrix_from_json(j.at("params").at("user_embedding.E")).rows() == ids.user_rows());
  CHECK(nn::matrix_from_json(j.at("params").at("item_embedding.E")).rows() == ids.item_rows());

  // Silence the right half of the merge weights: the output must then ignore ids and users.
  for (auto* p : m->parameters())
    if (p->name == "merge.W") p->value.rightCols(d.lstm_hidden).setZero();
  auto a = random_batch(6, d, ids.item_rows(), ids.user_rows(), rng);
  auto b = a;
  for (auto& r : b.item_rows) r = r == 0 ? 0 : 1 + (r % 4);
  for (auto& u : b.user_rows) u = 1 - u;
  CHECK(predict(*m, a) == predict(*m, b));
  auto c = a;
  c.features *= 0.5;
  CHECK(predict(*m, a) != predict(*m, c));
}

TEST_CASE("train_predictor keeps the best validation epoch and is deterministic") {
  Rng rng(47);
  const auto d = tiny_predictor_dims();
  const IdIndex ids({ItemId{1}, ItemId{2}, ItemId{3}, ItemId{4}}, {UserId{1}, UserId{2}});
  auto train = random_batch(200, d, ids.item_rows(), ids.user_rows(), rng);
  // planted rule: sessions whose last slot uses feature row 1 or 2 buy
  for (std::size_t s = 0; s < train.size(); ++s)
    train.labels[s] = train.content_rows[s * train.max_len + train.max_len - 1] <= 2 ? 1 : 0;
  auto val = random_batch(100, d, ids.item_rows(), ids.user_rows(), rng);
  val.features = train.features;
  for (std::size_t s = 0; s < val.size(); ++s)
    val.labels[s] = val.content_rows[s * val.max_len + val.max_len - 1] <= 2 ? 1 : 0;

  const TrainConfig cfg{6, 16, 0.01, 3};
  for (const auto kind : {ModelKind::content, ModelKind::baseline, ModelKind::integrated}) {
    auto m1 = make_predictor(kind, d, ids, 1);
    auto m2 = make_predictor(kind, d, ids, 1);
    const auto r1 = train_predictor(*m1, train, val, cfg);
    const auto r2 = train_predictor(*m2, train, val, cfg);
    CHECK(r1.trace.size() == 6);
    double best = -1.0;
    int arg = 0;
    for (const auto& e : r1.trace)
      if (e.val_auc > best) best = e.val_auc, arg = e.epoch;
    CHECK(r1.best_epoch == arg);
    CHECK(r1.best_val_auc == best);
    CHECK(metrics::auc({predict(*m1, val), val.labels}) == best);
    CHECK(m1->to_json().dump() == m2->to_json().dump());
    for (std::size_t k = 0; k < r1.trace.size(); ++k) {
      CHECK(r1.trace[k].val_auc == r2.trace[k].val_auc);
      CHECK(r1.trace[k].train_loss == r2.trace[k].train_loss);
    }
  }
  auto content = make_predictor(ModelKind::content, d, ids, 1);
  CHECK(train_predictor(*content, train, val, cfg).best_val_auc > 0.9);

  auto single = val;
  std::fill(single.labels.begin(), single.labels.end(), 0);
  auto m = make_predictor(ModelKind::content, d, ids, 1);
  CHECK_THROWS_AS(train_predictor(*m, train, single, cfg), MetricError);
  EncodedSessions empty;
  empty.max_len = 4;
  CHECK_THROWS_AS(train_predictor(*m, empty, val, cfg), DataError);
}

TEST_CASE("training a predictor leaves the embedding component untouched") {
  const auto g = [] {
    synth::GeneratorConfig c;
    c.items_per_category = 4;
    c.n_users = 300;
    c.n_sessions = 1200;
    return c;
  }();
  const auto sc = synth::generate_catalog(g);
  const auto ss = synth::generate_sessions(sc, g);
  const auto vocab = data::build_vocabulary(sc.catalog);
  const auto items = resolve_catalog(sc.catalog, vocab);
  auto trained = train_embedding_component(items, vocab, {0, 8, 8, 3, 13}, TrainConfig{2, 16, 0.001, 1});
  auto comp = std::make_shared<const EmbeddingComponent>(std::move(trained.component));
  const auto before = comp->to_json().dump();
  auto table = std::make_shared<const ItemEmbeddingTable>(build_embedding_table(*comp, items));
  const ContentFeatures f(comp, table, items);
  const auto [vd, td] = data::last_two_days(ss.sessions);
  const auto split = data::chronological_split(ss.sessions, vd, td);
  const auto ids = build_id_index(split.train);
  const auto d = tiny_predictor_dims();
  for (const auto kind : {ModelKind::content, ModelKind::integrated}) {
    auto m = make_predictor(kind, d, ids, 1);
    train_predictor(*m, encode_sessions(split.train, &f, &ids, 4), encode_sessions(split.validation, &f, &ids, 4),
                    TrainConfig{2, 64, 0.001, 1});
  }
  CHECK(comp->to_json().dump() == before);
}

TEST_CASE("session encoding") {
  const auto vocab = tiny_vocab();
  auto c = std::make_shared<EmbeddingComponent>(tiny_embedding_dims(), vocab, 8);
  c->detach_head();
  c->freeze();
  const std::vector<data::Item> items{make_item(1, 1, {2}, {3}), make_item(2, 2, {4}, {5})};
  auto table = std::make_shared<ItemEmbeddingTable>(build_embedding_table(*c, items));
  const ContentFeatures f(c, table, items);
  data::Session s;
  s.user = UserId{3};
  s.label = 1;
  s.clicks = {{ItemId{2}, 0, UserId{3}}, {ItemId{1}, 1, UserId{3}}, {ItemId{2}, 2, UserId{3}}};
  const IdIndex ids({ItemId{1}}, {UserId{3}});
  const std::vector<data::Session> one{s};
  const auto e = encode_sessions(one, &f, &ids, 4);
  CHECK(e.labels == std::vector<int>{1});
  CHECK(e.features.row(0).isZero(0.0));
  CHECK(e.content_rows == std::vector<int>{0, 1, 2, 1});
  CHECK(e.features.row(1) == f.vector(ItemId{2}));
  CHECK(e.item_rows == std::vector<int>{0, 1, 2, 1});
  CHECK(e.user_rows == std::vector<int>{1});
  const auto no_ids = encode_sessions(one, &f, nullptr, 4);
  CHECK(no_ids.item_rows.empty());
  const auto m = make_predictor(ModelKind::baseline, tiny_predictor_dims(), ids, 1);
  CHECK_THROWS_AS(predict(*m, no_ids), ShapeError);
}
