#include "pisa/app/commands.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "pisa/common/errors.hpp"
#include "pisa/data/io.hpp"
#include "pisa/data/text.hpp"
#include "pisa/metrics/metrics.hpp"
#include "pisa/synth/generator.hpp"

namespace pisa::app {

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--x-list: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("--x-list is empty");
  return out;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " path configured");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " file not found: " + path);
}

nlohmann::json read_json(const std::string& path, const char* what) {
  require_file(path, what);
  std::ifstream f(path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

template <typename Writer>
void write_file(const fs::path& dir, const std::string& rel, std::vector<std::string>& written, Writer&& writer) {
  const fs::path p = dir / rel;
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  writer(f);
  if (!f) throw DataError("failed writing " + p.string());
  written.push_back(rel);
}

std::string embedding_path(const RunConfig& cfg) {
  return cfg.paths.embedding.empty() ? (fs::path(cfg.paths.out) / "embedding_component.json").string()
                                     : cfg.paths.embedding;
}

struct Features {
  std::vector<data::Item> items;
  std::shared_ptr<const models::EmbeddingComponent> component;
  std::shared_ptr<const models::ItemEmbeddingTable> table;
  std::unique_ptr<models::ContentFeatures> features;
};

Features load_features(const RunConfig& cfg, const data::Catalog& catalog) {
  Features f;
  auto component = models::EmbeddingComponent::from_json(read_json(embedding_path(cfg), "embedding component"));
  if (!component.frozen()) throw DataError("embedding component file is not frozen");
  f.items = models::resolve_catalog(catalog, component.vocabulary());
  f.component = std::make_shared<const models::EmbeddingComponent>(std::move(component));
  f.table = std::make_shared<const models::ItemEmbeddingTable>(models::build_embedding_table(*f.component, f.items));
  f.features = std::make_unique<models::ContentFeatures>(f.component, f.table, f.items);
  return f;
}

std::vector<int> labels_of(const std::vector<data::Session>& sessions) {
  std::vector<int> out;
  for (const auto& s : sessions) out.push_back(s.label);
  return out;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.generator.seed = *o.seed;
    cfg.embedding_train.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.out) cfg.paths.out = *o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.protocol) cfg.protocol = experiments::parse_protocol(*o.protocol);
  if (o.x_list) cfg.x_list = parse_fractions(*o.x_list);
  if (o.catalog) cfg.paths.catalog = *o.catalog;
  if (o.events) cfg.paths.events = *o.events;
  if (o.embedding) cfg.paths.embedding = *o.embedding;
  cfg.validate();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericError*>(&e)) return kNumericFailure;
  if (dynamic_cast<const Error*>(&e)) return kDataFailure;
  return 1;
}

LoadedData load_data(const RunConfig& cfg) {
  require_file(cfg.paths.catalog, "catalog");
  require_file(cfg.paths.events, "events");
  LoadedData d;
  d.catalog = data::read_catalog(fs::path(cfg.paths.catalog));
  const auto events = data::read_events(fs::path(cfg.paths.events));
  const auto sessions = data::sessionize(events, cfg.split.window_seconds);
  if (sessions.empty()) throw DataError("no sessions in " + cfg.paths.events);
  for (const auto& s : sessions)
    for (const auto& c : s.clicks)
      if (!d.catalog.find(c.item))
        throw DataError("event references item " + std::to_string(data::raw(c.item)) + " missing from the catalog");
  data::Day val_day = cfg.split.val_day, test_day = cfg.split.test_day;
  if (val_day < 0) std::tie(val_day, test_day) = data::last_two_days(sessions);
  d.split = data::chronological_split(sessions, val_day, test_day);
  return d;
}

void cmd_gen_data(const RunConfig& cfg, bool force, std::ostream& log) {
  const fs::path dir(cfg.paths.out);
  const std::vector<std::string> names{"catalog.tsv", "events.tsv"};
  for (const auto& n : names)
    if (fs::exists(dir / n) && !force)
      throw ConfigError((dir / n).string() + " exists; pass --force to overwrite");
  synth::GeneratorConfig g = cfg.generator;
  g.seed = cfg.seed;
  const auto catalog = synth::generate_catalog(g);
  const auto sessions = synth::generate_sessions(catalog, g);
  const auto events = sessions.events();
  fs::create_directories(dir);
  data::write_catalog(dir / names[0], catalog.catalog);
  data::write_events(dir / names[1], events);
  update_manifest(dir, names);
  std::size_t buys = 0;
  for (const auto& s : sessions.sessions) buys += s.label != 0;
  log << "wrote " << catalog.catalog.size() << " items and " << events.size() << " events (" << sessions.sessions.size()
      << " sessions, " << buys << " with a buy) to " << dir.string() << '\n';
}

void cmd_train_embed(const RunConfig& cfg, std::ostream& log) {
  require_file(cfg.paths.catalog, "catalog");
  const auto catalog = data::read_catalog(fs::path(cfg.paths.catalog));
  if (catalog.empty()) throw DataError("catalog is empty");
  const auto vocab = data::build_vocabulary(catalog);
  const auto items = models::resolve_catalog(catalog, vocab);
  models::EmbeddingDims dims = cfg.embedding_dims;
  dims.categories = std::max(dims.categories, catalog.max_category());
  models::TrainConfig tc = cfg.embedding_train;
  tc.seed = cfg.seed;
  const auto result = models::train_embedding_component(items, vocab, dims, tc);
  const auto table = models::build_embedding_table(result.component, items);

  const fs::path dir(cfg.paths.out);
  std::vector<std::string> written;
  write_file(dir, "embedding_component.json", written,
             [&](std::ostream& o) { o << result.component.to_json().dump() << '\n'; });
  write_file(dir, "item_table.json", written, [&](std::ostream& o) { o << table.to_json().dump() << '\n'; });
  write_file(dir, "embedding_log.csv", written, [&](std::ostream& o) {
    o << "epoch,train_loss,heldout_accuracy,heldout_loss\n";
    for (const auto& e : result.trace)
      o << e.epoch << ',' << experiments::format_real(e.train_loss) << ','
        << experiments::format_real(e.heldout_accuracy) << ',' << experiments::format_real(e.heldout_loss) << '\n';
  });
  update_manifest(dir, written);
  const auto& best = result.trace[static_cast<std::size_t>(result.best_epoch - 1)];
  log << "embedding component: best epoch " << best.epoch << ", held-out accuracy " << best.heldout_accuracy << " on "
      << result.heldout_items << " items\n";
}

void cmd_train(const RunConfig& cfg, models::ModelKind kind, std::ostream& log) {
  if (kind == models::ModelKind::embedding_component) throw ConfigError("use train-embed for the embedding component");
  const auto d = load_data(cfg);
  for (const auto& w : d.split.warnings) log << "warning: " << w << '\n';
  const models::IdIndex ids = models::build_id_index(d.split.train);
  auto model = models::make_predictor(kind, cfg.predictor_dims, ids, cfg.seed);
  Features f;
  if (model->uses_content()) f = load_features(cfg, d.catalog);
  const auto max_len = static_cast<std::size_t>(cfg.predictor_dims.max_len);
  const auto train = models::encode_sessions(d.split.train, f.features.get(), model->id_index(), max_len);
  const auto val = models::encode_sessions(d.split.validation, f.features.get(), model->id_index(), max_len);
  models::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const auto result = models::train_predictor(*model, train, val, tc);

  const fs::path dir(cfg.paths.out);
  const std::string name = models::to_string(kind);
  std::vector<std::string> written;
  write_file(dir, name + ".json", written, [&](std::ostream& o) { o << model->to_json().dump() << '\n'; });
  write_file(dir, "trace_" + name + ".csv", written,
             [&](std::ostream& o) { experiments::write_trace_csv(result.trace, o); });
  update_manifest(dir, written);
  log << name << ": best epoch " << result.best_epoch << ", validation AUC " << result.best_val_auc << '\n';
}

void cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& model_files, std::ostream& log) {
  if (model_files.empty()) throw ConfigError("evaluate needs at least one --model file");
  const auto d = load_data(cfg);
  if (d.split.test.empty()) throw DataError("empty test partition");
  const auto labels = labels_of(d.split.test);

  std::vector<std::string> names;
  std::vector<std::vector<double>> scores;
  std::map<std::string, int> seen;
  Features f;
  for (const auto& path : model_files) {
    const auto model = models::load_predictor(read_json(path, "model"));
    if (model->uses_content() && !f.features) f = load_features(cfg, d.catalog);
    scores.push_back(models::predict(*model, d.split.test, f.features.get()));
    std::string stem = fs::path(path).stem().string();
    if (const int n = ++seen[stem]; n > 1) stem += "_" + std::to_string(n);
    names.push_back(stem);
  }

  const fs::path dir(cfg.paths.out);
  std::vector<std::string> written;
  std::vector<double> aucs, aps;
  for (std::size_t m = 0; m < names.size(); ++m) {
    const metrics::ScoredSet s{scores[m], labels};
    aucs.push_back(metrics::auc(s));
    aps.push_back(metrics::average_precision(s));
    const auto roc = metrics::roc_curve(s);
    write_file(dir, "roc_" + names[m] + ".csv", written, [&](std::ostream& o) { experiments::write_roc_csv(roc, o); });
  }
  std::vector<std::tuple<std::size_t, std::size_t, metrics::DeLongResult>> tests;
  for (std::size_t a = 0; a < names.size(); ++a)
    for (std::size_t b = a + 1; b < names.size(); ++b)
      tests.emplace_back(a, b, metrics::delong_test(scores[a], scores[b], labels));

  write_file(dir, "evaluation.csv", written, [&](std::ostream& o) {
    o << "model,sessions,positives,auc,ap\n";
    const metrics::ScoredSet s{{}, labels};
    for (std::size_t m = 0; m < names.size(); ++m)
      o << names[m] << ',' << labels.size() << ',' << s.positives() << ',' << experiments::format_real(aucs[m]) << ','
        << experiments::format_real(aps[m]) << '\n';
  });
  auto report = [&](std::ostream& o) {
    o << "Test sessions: " << labels.size() << "\n\n";
    for (std::size_t m = 0; m < names.size(); ++m)
      o << names[m] << "  AUC " << experiments::format_real(aucs[m]) << "  AP " << experiments::format_real(aps[m])
        << '\n';
    if (!tests.empty()) {
      o << "\nDeLong tests\n";
      for (const auto& [a, b, r] : tests)
        o << names[a] << " vs " << names[b] << "  z " << experiments::format_real(r.z) << "  p "
          << experiments::format_real(r.p_value) << '\n';
    }
  };
  write_file(dir, "evaluation.txt", written, report);
  if (!tests.empty())
    write_file(dir, "delong.csv", written, [&](std::ostream& o) {
      o << "model_a,model_b,auc_a,auc_b,variance,z,p\n";
      for (const auto& [a, b, r] : tests)
        o << names[a] << ',' << names[b] << ',' << experiments::format_real(r.auc_a) << ','
          << experiments::format_real(r.auc_b) << ',' << experiments::format_real(r.variance) << ','
          << experiments::format_real(r.z) << ',' << experiments::format_real(r.p_value) << '\n';
    });
  update_manifest(dir, written);
  report(log);
}

void cmd_experiment(const RunConfig& cfg, std::ostream& log) {
  const auto d = load_data(cfg);
  for (const auto& w : d.split.warnings) log << "warning: " << w << '\n';
  experiments::ExperimentData data{d.catalog, d.split.train, d.split.validation, d.split.test};
  const auto report = experiments::run_experiment(data, cfg.experiment_config());
  const auto written = experiments::write_experiment_outputs(report, cfg.paths.out);
  update_manifest(cfg.paths.out, written);
  experiments::write_report_text(report, log);
}

}  // namespace pisa::app
