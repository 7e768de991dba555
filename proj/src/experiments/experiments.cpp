#include "pisa/experiments/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "pisa/common/errors.hpp"
#include "pisa/common/rng.hpp"
#include "pisa/data/text.hpp"

namespace pisa::experiments {

namespace {

// Guards floor(X * n) against X * n landing just below an integer.
constexpr double kFloorSlack = 1e-9;

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

std::size_t positives(std::span<const data::Session> sessions) {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.label != 0;
  return n;
}

std::vector<int> labels_of(std::span<const data::Session> sessions) {
  std::vector<int> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(s.label);
  return out;
}

bool both_classes(std::span<const int> labels) {
  const metrics::ScoredSet s{{}, labels};
  return s.positives() > 0 && s.negatives() > 0;
}

std::string strf(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Rethrows the active pisa error with the condition label prepended, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& where) {
  try {
    throw;
  } catch (const MetricError& e) {
    throw MetricError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::string format_real(double v) { return strf("%.17g", v); }

void ColdStartConfig::validate() const {
  if (!(removal_fraction >= 0.0 && removal_fraction <= 1.0))
    throw ConfigError("cold start: removal fraction must lie in [0, 1]");
}

ColdRemoval remove_cold_items(std::span<const data::Session> train, const data::Catalog& catalog,
                              const ColdStartConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<data::ItemId>> by_category;
  for (const auto id : item_universe(train)) {
    const auto* rec = catalog.find(id);
    by_category[rec ? rec->category : 0].push_back(id);
  }
  ColdRemoval out;
  const Rng base(cfg.seed);
  for (const auto& [category, ids] : by_category) {
    const auto k = static_cast<std::size_t>(
        std::floor(cfg.removal_fraction * static_cast<double>(ids.size()) + kFloorSlack));
    Rng rng = base.split(static_cast<std::uint64_t>(category));
    for (const auto pick : rng.sample_without_replacement(ids.size(), k)) out.removed.insert(ids[pick]);
  }
  for (const auto& s : train) {
    const bool hit = std::any_of(s.clicks.begin(), s.clicks.end(),
                                 [&](const data::ClickEvent& c) { return out.removed.count(c.item) > 0; });
    if (!hit) out.train.push_back(s);
  }
  return out;
}

std::vector<data::Session> random_removal(std::span<const data::Session> train, std::size_t n_remove,
                                          std::uint64_t seed) {
  if (n_remove > train.size())
    throw ConfigError("random_removal: cannot remove " + std::to_string(n_remove) + " of " +
                      std::to_string(train.size()) + " sessions");
  Rng rng(seed);
  std::vector<bool> drop(train.size(), false);
  for (const auto k : rng.sample_without_replacement(train.size(), n_remove)) drop[k] = true;
  std::vector<data::Session> out;
  out.reserve(train.size() - n_remove);
  for (std::size_t k = 0; k < train.size(); ++k)
    if (!drop[k]) out.push_back(train[k]);
  return out;
}

ItemSet item_universe(std::span<const data::Session> sessions) {
  ItemSet out;
  for (const auto& s : sessions)
    for (const auto& c : s.clicks) out.insert(c.item);
  return out;
}

std::vector<SessionColdness> classify_sessions(std::span<const data::Session> test, const ItemSet& universe) {
  std::vector<SessionColdness> out;
  out.reserve(test.size());
  for (const auto& s : test) {
    SessionColdness c;
    c.session_id = s.id;
    c.total_items = s.clicks.size();
    for (const auto& click : s.clicks) c.cold_item_count += universe.count(click.item) == 0;
    c.is_cold = c.cold_item_count > 0;
    c.cold_ratio = c.total_items == 0 ? 0.0
                                      : static_cast<double>(c.cold_item_count) / static_cast<double>(c.total_items);
    out.push_back(c);
  }
  return out;
}

FilterResult filter_test_by_cold_ratio(std::span<const SessionColdness> coldness, const ColdFilter& filter) {
  if (filter.mode == ColdFilter::Mode::min_ratio && !(filter.min_ratio >= 0.0 && filter.min_ratio <= 1.0))
    throw ConfigError("cold ratio filter: ratio must lie in [0, 1]");
  FilterResult r;
  for (const auto& c : coldness) {
    const bool keep =
        filter.mode == ColdFilter::Mode::no_cold ? c.cold_item_count == 0 : c.cold_ratio >= filter.min_ratio;
    if (keep) r.session_ids.push_back(c.session_id);
  }
  if (r.session_ids.empty())
    r.warning = filter.mode == ColdFilter::Mode::no_cold
                    ? std::string("no test session is free of cold items")
                    : "no test session has a cold-item ratio >= " + strf("%g", filter.min_ratio);
  return r;
}

// ---------------------------------------------------------------------------

int session_category(const data::Session& session, const data::Catalog& catalog) {
  std::map<int, std::size_t> counts;
  for (const auto& c : session.clicks) {
    const auto* rec = catalog.find(c.item);
    if (!rec) throw DataError("session " + std::to_string(session.id) + " clicks item " +
                              std::to_string(data::raw(c.item)) + " missing from the catalog");
    ++counts[rec->category];
  }
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [category, n] : counts)
    if (n > best_count) {
      best = category;
      best_count = n;
    }
  return best;
}

CategoryReport per_category_report(std::span<const data::Session> test, const data::Catalog& catalog,
                                   std::span<const std::string> model_names,
                                   std::span<const std::vector<double>> model_scores) {
  if (model_names.size() != model_scores.size()) throw ShapeError("per_category_report: one name per score list");
  for (const auto& s : model_scores)
    if (s.size() != test.size()) throw ShapeError("per_category_report: one score per test session");

  std::map<int, CategoryRow> rows;
  std::map<int, std::size_t> words;
  for (const auto& r : catalog.records()) {
    auto& row = rows[r.category];
    row.category = r.category;
    ++row.item_count;
    words[r.category] += data::tokenize(r.description).size();
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < test.size(); ++k) members[session_category(test[k], catalog)].push_back(k);

  CategoryReport report;
  report.models.assign(model_names.begin(), model_names.end());
  for (auto& [category, row] : rows) {
    row.mean_description_length = static_cast<double>(words[category]) / static_cast<double>(row.item_count);
    const auto& idx = members[category];
    row.session_count = idx.size();
    std::vector<int> labels;
    for (const auto k : idx) labels.push_back(test[k].label);
    row.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    row.auc_defined = both_classes(labels);
    for (const auto& scores : model_scores) {
      if (!row.auc_defined) {
        row.auc.emplace_back();
        continue;
      }
      std::vector<double> sub;
      for (const auto k : idx) sub.push_back(scores[k]);
      row.auc.emplace_back(metrics::auc({sub, labels}));
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::all_data:
      return "all-data";
    case Protocol::cold_start:
      return "cold-start";
    case Protocol::random_removal:
      return "random-removal";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "all-data" || name == "all_data") return Protocol::all_data;
  if (name == "cold-start" || name == "cold_start") return Protocol::cold_start;
  if (name == "random-removal" || name == "random_removal") return Protocol::random_removal;
  throw ConfigError("unknown protocol '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("experiment: no models requested");
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i] == models::ModelKind::embedding_component)
      throw ConfigError("experiment: the embedding component is not a session predictor");
    for (std::size_t j = 0; j < i; ++j)
      if (models[i] == models[j]) throw ConfigError("experiment: model '" + models::to_string(models[i]) + "' listed twice");
  }
  if (protocol != Protocol::all_data) {
    if (x_list.empty()) throw ConfigError("experiment: empty X list");
    for (const double x : x_list) ColdStartConfig{x, seed}.validate();
  }
  if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
  if (!(min_cold_ratio >= 0.0 && min_cold_ratio <= 1.0)) throw ConfigError("experiment: min_cold_ratio outside [0, 1]");
  if (embedding_dims.embed_dim != predictor_dims.content_dim)
    throw ConfigError("experiment: item embedding size differs from the predictors' content input size");
  train.validate();
  embedding_train.validate();
}

namespace {

std::size_t condition_count(const ExperimentConfig& cfg) {
  return cfg.protocol == Protocol::all_data ? 1 : cfg.x_list.size();
}

std::string condition_label(const ExperimentConfig& cfg, std::size_t index) {
  if (cfg.protocol == Protocol::all_data) return "all-data";
  return "x" + strf("%.2f", cfg.x_list[index]);
}

std::uint64_t model_seed(std::uint64_t condition_seed, std::size_t model_index) {
  return Rng::mix(condition_seed + 0x51ed27u * (model_index + 1));
}

ConditionResult run_condition_impl(const ExperimentData& data, const ExperimentConfig& cfg, std::size_t index) {
  ConditionResult c;
  c.label = condition_label(cfg, index);
  c.x = cfg.protocol == Protocol::all_data ? 0.0 : cfg.x_list[index];
  c.seed = cfg.seed ^ static_cast<std::uint64_t>(index);

  std::vector<data::Session> train;
  switch (cfg.protocol) {
    case Protocol::all_data:
      train = data.train;
      break;
    case Protocol::cold_start: {
      auto removal = remove_cold_items(data.train, data.catalog, {c.x, cfg.seed});
      c.removed_items = removal.removed.size();
      train = std::move(removal.train);
      break;
    }
    case Protocol::random_removal: {
      const auto matched = remove_cold_items(data.train, data.catalog, {c.x, cfg.seed});
      train = random_removal(data.train, data.train.size() - matched.train.size(), c.seed);
      break;
    }
  }
  if (train.empty()) throw DataError("every train session was removed");
  c.removed_sessions = data.train.size() - train.size();
  c.train_sessions = train.size();
  c.train_buy_pct = pct(positives(train), train.size());

  const ItemSet universe = item_universe(train);
  const auto coldness = classify_sessions(data.test, universe);
  std::size_t cold_pos = 0, warm_pos = 0;
  for (std::size_t k = 0; k < coldness.size(); ++k) {
    if (coldness[k].is_cold) {
      ++c.cold_sessions;
      cold_pos += data.test[k].label != 0;
    } else {
      ++c.warm_sessions;
      warm_pos += data.test[k].label != 0;
    }
  }
  c.cold_buy_pct = pct(cold_pos, c.cold_sessions);
  c.warm_buy_pct = pct(warm_pos, c.warm_sessions);
  c.pct_cold = pct(c.cold_sessions, data.test.size());

  // Embedding component: vocabulary from the whole catalog, trained on the
  // items left in the reduced train set, applied to every catalog item.
  const data::Vocabulary vocab = data::build_vocabulary(data.catalog);
  const auto all_items = models::resolve_catalog(data.catalog, vocab);
  std::vector<data::Item> train_items;
  for (const auto& it : all_items)
    if (universe.count(it.id)) train_items.push_back(it);
  models::TrainConfig ecfg = cfg.embedding_train;
  ecfg.seed = c.seed;
  models::EmbeddingDims edims = cfg.embedding_dims;
  edims.categories = std::max(edims.categories, data.catalog.max_category());
  auto trained = models::train_embedding_component(train_items, vocab, edims, ecfg);
  c.embedding_best_epoch = trained.best_epoch;
  c.embedding_heldout_accuracy = trained.trace[static_cast<std::size_t>(trained.best_epoch - 1)].heldout_accuracy;
  auto component = std::make_shared<const models::EmbeddingComponent>(std::move(trained.component));
  if (cfg.keep_models) c.embedding_component = component->to_json();
  auto table = std::make_shared<const models::ItemEmbeddingTable>(models::build_embedding_table(*component, all_items));
  const models::ContentFeatures features(component, table, all_items);

  const models::IdIndex ids = models::build_id_index(train);
  const auto max_len = static_cast<std::size_t>(cfg.predictor_dims.max_len);
  const auto enc_train = models::encode_sessions(train, &features, &ids, max_len);
  const auto enc_val = models::encode_sessions(data.validation, &features, &ids, max_len);
  const auto enc_test = models::encode_sessions(data.test, &features, &ids, max_len);
  const std::vector<int> test_labels = labels_of(data.test);

  std::vector<std::size_t> no_cold, mostly_cold;
  for (std::size_t k = 0; k < coldness.size(); ++k) {
    if (!coldness[k].is_cold) no_cold.push_back(k);
    if (coldness[k].cold_ratio >= cfg.min_cold_ratio) mostly_cold.push_back(k);
  }
  for (const auto& f : {filter_test_by_cold_ratio(coldness, {ColdFilter::Mode::no_cold, 0.0}),
                        filter_test_by_cold_ratio(coldness, {ColdFilter::Mode::min_ratio, cfg.min_cold_ratio})})
    if (f.warning) c.warnings.push_back(*f.warning);

  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const auto kind = cfg.models[m];
    auto model = models::make_predictor(kind, cfg.predictor_dims, ids, model_seed(c.seed, m));
    models::TrainConfig tcfg = cfg.train;
    tcfg.seed = model_seed(c.seed, m);
    const auto tr = models::train_predictor(*model, enc_train, enc_val, tcfg);

    ModelResult r;
    r.kind = kind;
    r.trace = tr.trace;
    r.best_epoch = tr.best_epoch;
    r.best_val_auc = tr.best_val_auc;
    r.scores = models::predict(*model, enc_test);
    const metrics::ScoredSet all{r.scores, test_labels};
    r.auc = metrics::auc(all);
    r.ap = metrics::average_precision(all);
    r.roc = metrics::roc_curve(all);
    const std::pair<const char*, const std::vector<std::size_t>*> subsets[] = {{"no_cold", &no_cold},
                                                                               {"min_cold_ratio", &mostly_cold}};
    for (const auto& [name, idx] : subsets) {
      SubsetMetrics s;
      s.name = name;
      s.sessions = idx->size();
      std::vector<double> sc;
      std::vector<int> lb;
      for (const auto k : *idx) {
        sc.push_back(r.scores[k]);
        lb.push_back(test_labels[k]);
      }
      if (both_classes(lb)) {
        s.auc = metrics::auc({sc, lb});
        s.ap = metrics::average_precision({sc, lb});
      }
      r.subsets.push_back(s);
    }
    if (cfg.keep_models) r.model = model->to_json();
    c.models.push_back(std::move(r));
  }

  for (std::size_t a = 0; a < c.models.size(); ++a)
    for (std::size_t b = a + 1; b < c.models.size(); ++b)
      c.delong.push_back({c.models[a].kind, c.models[b].kind,
                          metrics::delong_test(c.models[a].scores, c.models[b].scores, test_labels)});

  std::vector<std::string> names;
  std::vector<std::vector<double>> scores;
  for (const auto& r : c.models) {
    names.push_back(models::to_string(r.kind));
    scores.push_back(r.scores);
  }
  c.categories = per_category_report(data.test, data.catalog, names, scores);
  for (const auto& row : c.categories.rows)
    if (!row.auc_defined && row.session_count > 0)
      c.warnings.push_back("category " + std::to_string(row.category) + " has a single class; AUC undefined");
  return c;
}

}  // namespace

ConditionResult run_condition(const ExperimentData& data, const ExperimentConfig& cfg, std::size_t index) {
  if (index >= condition_count(cfg)) throw ConfigError("run_condition: condition index out of range");
  try {
    return run_condition_impl(data, cfg, index);
  } catch (const Error&) {
    rethrow_with_context("condition " + condition_label(cfg, index));
  }
}

ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg) {
  cfg.validate();
  if (data.test.empty()) throw DataError("experiment: empty test set");
  ExperimentReport report;
  report.protocol = cfg.protocol;
  report.seed = cfg.seed;
  report.test_sessions = data.test.size();
  report.test_buy_pct = pct(positives(data.test), data.test.size());

  const std::size_t n = condition_count(cfg);
  std::vector<std::optional<ConditionResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        results[k] = run_condition(data, cfg, k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.workers));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < n; ++k)
    if (errors[k]) std::rethrow_exception(errors[k]);
  for (auto& r : results) report.conditions.push_back(std::move(*r));
  return report;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "n/a"; }

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& out) const {
    std::vector<std::size_t> width(rows_.front().size(), 0);
    for (const auto& r : rows_)
      for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], r[k].size());
    auto line = [&](const std::vector<std::string>& r) {
      std::string s;
      for (std::size_t k = 0; k < r.size(); ++k) {
        if (k) s += "  ";
        // first column left-aligned, numbers right-aligned
        const std::string pad(width[k] - r[k].size(), ' ');
        s += k == 0 ? r[k] + pad : pad + r[k];
      }
      while (!s.empty() && s.back() == ' ') s.pop_back();
      out << s << '\n';
    };
    line(rows_.front());
    std::size_t total = 0;
    for (const auto w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (std::size_t k = 1; k < rows_.size(); ++k) line(rows_[k]);
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

const SubsetMetrics* find_subset(const ModelResult& r, const std::string& name) {
  for (const auto& s : r.subsets)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace

void write_report_text(const ExperimentReport& report, std::ostream& out) {
  out << "Protocol: " << to_string(report.protocol) << "\n";
  out << "Seed: " << report.seed << "\n";
  out << "Test sessions: " << report.test_sessions << " (buy " << fixed(report.test_buy_pct, 2) << "%)\n\n";

  out << "Dataset statistics\n";
  Table stats({"Condition", "Removed items", "Removed sessions", "Train sessions", "Train buy %", "Cold sessions",
               "Cold buy %", "Warm sessions", "Warm buy %", "% Cold"});
  for (const auto& c : report.conditions)
    stats.add({c.label, std::to_string(c.removed_items), std::to_string(c.removed_sessions),
               std::to_string(c.train_sessions), fixed(c.train_buy_pct, 2), std::to_string(c.cold_sessions),
               fixed(c.cold_buy_pct, 2), std::to_string(c.warm_sessions), fixed(c.warm_buy_pct, 2),
               fixed(c.pct_cold, 2)});
  stats.print(out);

  out << "\nModels\n";
  Table models_table({"Condition", "Model", "AUC", "AP", "Best epoch", "Val AUC", "AUC no-cold", "AUC mostly-cold",
                      "Embedding acc"});
  for (const auto& c : report.conditions)
    for (const auto& r : c.models) {
      const auto* nc = find_subset(r, "no_cold");
      const auto* mc = find_subset(r, "min_cold_ratio");
      models_table.add({c.label, models::to_string(r.kind), fixed(r.auc, 4), fixed(r.ap, 4),
                        std::to_string(r.best_epoch), fixed(r.best_val_auc, 4), nc ? opt_fixed(nc->auc, 4) : "n/a",
                        mc ? opt_fixed(mc->auc, 4) : "n/a", fixed(c.embedding_heldout_accuracy, 3)});
    }
  models_table.print(out);

  bool any_pair = false;
  for (const auto& c : report.conditions) any_pair = any_pair || !c.delong.empty();
  if (any_pair) {
    out << "\nDeLong tests\n";
    Table d({"Condition", "Model A", "Model B", "AUC A", "AUC B", "z", "p"});
    for (const auto& c : report.conditions)
      for (const auto& p : c.delong)
        d.add({c.label, models::to_string(p.a), models::to_string(p.b), fixed(p.result.auc_a, 4),
               fixed(p.result.auc_b, 4), fixed(p.result.z, 3), strf("%.3g", p.result.p_value)});
    d.print(out);
  }

  for (const auto& c : report.conditions)
    for (const auto& w : c.warnings) out << "\nwarning [" << c.label << "]: " << w;
  out << '\n';
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "protocol,condition,x,seed,removed_items,removed_sessions,train_sessions,train_buy_pct,cold_sessions,"
         "cold_buy_pct,warm_sessions,warm_buy_pct,pct_cold,model,auc,ap,best_epoch,best_val_auc,no_cold_sessions,"
         "no_cold_auc,no_cold_ap,min_cold_ratio_sessions,min_cold_ratio_auc,min_cold_ratio_ap\n";
  for (const auto& c : report.conditions)
    for (const auto& r : c.models) {
      out << to_string(report.protocol) << ',' << c.label << ',' << format_real(c.x) << ',' << c.seed << ','
          << c.removed_items << ',' << c.removed_sessions << ',' << c.train_sessions << ','
          << format_real(c.train_buy_pct) << ',' << c.cold_sessions << ',' << format_real(c.cold_buy_pct) << ','
          << c.warm_sessions << ',' << format_real(c.warm_buy_pct) << ',' << format_real(c.pct_cold) << ','
          << models::to_string(r.kind) << ',' << format_real(r.auc) << ',' << format_real(r.ap) << ','
          << r.best_epoch << ',' << format_real(r.best_val_auc);
      for (const char* name : {"no_cold", "min_cold_ratio"}) {
        const auto* s = find_subset(r, name);
        out << ',' << (s ? s->sessions : 0) << ',' << (s ? opt_real(s->auc) : "") << ','
            << (s ? opt_real(s->ap) : "");
      }
      out << '\n';
    }
}

void write_roc_csv(std::span<const metrics::RocPoint> roc, std::ostream& out) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) out << format_real(p.fpr) << ',' << format_real(p.tpr) << ',' << format_real(p.threshold) << '\n';
}

void write_category_csv(const CategoryReport& report, std::ostream& out) {
  out << "category,item_count,mean_description_length,session_count,positives,auc_defined";
  for (const auto& m : report.models) out << ",auc_" << m;
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.category << ',' << r.item_count << ',' << format_real(r.mean_description_length) << ','
        << r.session_count << ',' << r.positives << ',' << (r.auc_defined ? 1 : 0);
    for (const auto& a : r.auc) out << ',' << opt_real(a);
    out << '\n';
  }
}

void write_trace_csv(std::span<const models::EpochRecord> trace, std::ostream& out) {
  out << "epoch,train_loss,val_auc\n";
  for (const auto& e : trace) out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_auc) << '\n';
}

std::vector<std::string> write_experiment_outputs(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  auto emit = [&](const std::string& rel, const auto& writer) {
    const fs::path path = fs::path(dir) / rel;
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    writer(f);
    if (!f) throw DataError("failed writing " + path.string());
    written.push_back(rel);
  };
  emit("report.txt", [&](std::ostream& o) { write_report_text(report, o); });
  emit("report.csv", [&](std::ostream& o) { write_report_csv(report, o); });
  for (const auto& c : report.conditions) {
    emit("categories_" + c.label + ".csv", [&](std::ostream& o) { write_category_csv(c.categories, o); });
    if (!c.embedding_component.is_null())
      emit("models/" + c.label + "_embedding_component.json",
           [&](std::ostream& o) { o << c.embedding_component.dump() << '\n'; });
    for (const auto& r : c.models) {
      const std::string stem = c.label + "_" + models::to_string(r.kind);
      emit("roc_" + stem + ".csv", [&](std::ostream& o) { write_roc_csv(r.roc, o); });
      emit("trace_" + stem + ".csv", [&](std::ostream& o) { write_trace_csv(r.trace, o); });
      if (!r.model.is_null()) emit("models/" + stem + ".json", [&](std::ostream& o) { o << r.model.dump() << '\n'; });
    }
  }
  return written;
}

}  // namespace pisa::experiments
