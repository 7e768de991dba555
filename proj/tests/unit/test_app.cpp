#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pisa/app/commands.hpp"
#include "pisa/app/config.hpp"
#include "pisa/common/errors.hpp"
#include "pisa/data/io.hpp"
#include "pisa/data/sessions.hpp"
#include "pisa/models/embedding.hpp"
#include "pisa/models/predictors.hpp"

using namespace pisa;
using namespace pisa::app;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_run(const fs::path& dir) {
  RunConfig c;
  c.paths.out = dir.string();
  c.paths.catalog = (dir / "catalog.tsv").string();
  c.paths.events = (dir / "events.tsv").string();
  c.generator.items_per_category = 4;
  c.generator.n_users = 200;
  c.generator.n_sessions = 800;
  c.embedding_dims = {0, 8, 8, 4, 13};
  c.embedding_train = {2, 16, 0.001, 1};
  c.predictor_dims = {4, 4, 6, 5, 10};
  c.train = {2, 64, 0.002, 1};
  return c;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(PISA_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config round trip and validation") {
  RunConfig c;
  c.seed = 99;
  c.x_list = {0.25, 0.75};
  c.protocol = experiments::Protocol::random_removal;
  c.models = {models::ModelKind::baseline};
  c.generator.beta = 3.5;
  const auto back = from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(back) == to_json(c));

  const auto partial = from_json(nlohmann::json{{"train", {{"max_epochs", 5}}}});
  CHECK(partial.train.max_epochs == 5);
  CHECK(partial.train.batch_size == RunConfig{}.train.batch_size);

  CHECK_THROWS_AS(from_json(nlohmann::json{{"version", "0"}}), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"trian", nlohmann::json::object()}}), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"train", {{"epochs", 5}}}}), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"train", {{"max_epochs", "five"}}}}), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"train", {{"max_epochs", 0}}}}), ConfigError);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"experiment", {{"models", {"rnn"}}}}}), ConfigError);
}

TEST_CASE("environment overrides") {
  std::map<std::string, std::string> env{{"PISA_TRAIN_MAX_EPOCHS", "3"},
                                         {"PISA_EXPERIMENT_X_LIST", "0.1,0.4"},
                                         {"PISA_EXPERIMENT_PROTOCOL", "cold-start"},
                                         {"PISA_GENERATOR_BETA", "2.5"}};
  auto j = to_json(RunConfig{});
  apply_env_overrides(j, [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  const auto c = from_json(j);
  CHECK(c.train.max_epochs == 3);
  CHECK(c.x_list == std::vector<double>{0.1, 0.4});
  CHECK(c.protocol == experiments::Protocol::cold_start);
  CHECK(c.generator.beta == 2.5);

  env = {{"PISA_TRAIN_MAX_EPOCHS", "many"}};
  auto k = to_json(RunConfig{});
  CHECK_THROWS_AS(apply_env_overrides(k, [&](const char* name) -> const char* {
                    const auto it = env.find(name);
                    return it == env.end() ? nullptr : it->second.c_str();
                  }),
                  ConfigError);
}

TEST_CASE("command-line overrides reach every seeded component") {
  RunConfig c;
  Overrides o;
  o.seed = 17;
  o.x_list = "0.2,0.6";
  o.protocol = "cold-start";
  apply_overrides(c, o);
  CHECK(c.seed == 17);
  const auto e = c.experiment_config();
  CHECK(e.seed == 17);
  CHECK(e.x_list == std::vector<double>{0.2, 0.6});
  CHECK(e.protocol == experiments::Protocol::cold_start);
  o.x_list = "0.2,zero";
  CHECK_THROWS_AS(apply_overrides(c, o), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(NumericError("x")) == 4);
  CHECK(exit_code_for(DataError("x")) == 3);
  CHECK(exit_code_for(ShapeError("x")) == 3);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("sha256 and manifest") {
  TempDir dir("pisa_manifest_test");
  {
    std::ofstream(dir.path / "a.txt", std::ios::binary) << "abc";
  }
  CHECK(sha256_file(dir.path / "a.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  update_manifest(dir.path, {"a.txt"});
  const auto m = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(m.at("tool_version") == kToolVersion);
  CHECK(m.at("files").at("a.txt").at("bytes") == 3);
}

TEST_CASE("gen-data writes parseable, reproducible files and refuses to overwrite") {
  TempDir dir("pisa_gen_data_test");
  const auto cfg = small_run(dir.path);
  std::ostringstream log;
  cmd_gen_data(cfg, false, log);
  const auto catalog = data::read_catalog(dir.path / "catalog.tsv");
  const auto events = data::read_events(dir.path / "events.tsv");
  CHECK(catalog.size() == 13 * 4);
  const auto sessions = data::sessionize(events);
  CHECK(sessions.size() == 800);
  std::size_t clicks = 0, buys = 0;
  for (const auto& s : sessions) clicks += s.clicks.size(), buys += s.label != 0;
  CHECK(events.size() == clicks + buys);

  const auto first = slurp(dir.path / "events.tsv");
  CHECK_THROWS_AS(cmd_gen_data(cfg, false, log), ConfigError);
  cmd_gen_data(cfg, true, log);
  CHECK(slurp(dir.path / "events.tsv") == first);
  const auto m = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(m.at("files").at("events.tsv").at("sha256") == sha256_file(dir.path / "events.tsv"));
}

TEST_CASE("train-embed, train and evaluate produce the documented files") {
  TempDir dir("pisa_pipeline_test");
  const auto cfg = small_run(dir.path);
  std::ostringstream log;
  cmd_gen_data(cfg, false, log);
  cmd_train_embed(cfg, log);
  const auto component = nlohmann::json::parse(slurp(dir.path / "embedding_component.json"));
  const auto reloaded = models::EmbeddingComponent::from_json(component);
  CHECK(reloaded.to_json().dump() == component.dump());
  CHECK(fs::exists(dir.path / "embedding_log.csv"));

  cmd_train(cfg, models::ModelKind::content, log);
  cmd_train(cfg, models::ModelKind::baseline, log);
  const auto trace = slurp(dir.path / "trace_content.csv");
  CHECK(trace.rfind("epoch,train_loss,val_auc\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 3);

  cmd_evaluate(cfg, {(dir.path / "content.json").string(), (dir.path / "baseline.json").string()}, log);
  CHECK(fs::exists(dir.path / "evaluation.csv"));
  CHECK(fs::exists(dir.path / "delong.csv"));
  CHECK(fs::exists(dir.path / "roc_content.csv"));

  auto missing = cfg;
  missing.paths.catalog = (dir.path / "nope.tsv").string();
  CHECK_THROWS_AS(cmd_train_embed(missing, log), ConfigError);
}

TEST_CASE("command-line tool exit codes") {
  TempDir dir("pisa_cli_test");
  const auto out = dir.path.string();
  CHECK(run_tool("--bogus") == 2);
  CHECK(run_tool("train-embed --catalog " + out + "/missing.tsv --out " + out) == 2);
  CHECK(run_tool("experiment --protocol sideways") == 2);
  {
    std::ofstream(dir.path / "bad.json") << R"({"version": "0"})";
  }
  CHECK(run_tool("--config " + out + "/bad.json gen-data --out " + out) == 2);
  {
    std::ofstream(dir.path / "catalog.tsv") << "id\tcategory\ttitle\tdescription\n1\tx\tt\td\n";
  }
  CHECK(run_tool("train-embed --catalog " + out + "/catalog.tsv --out " + out) == 3);
}
