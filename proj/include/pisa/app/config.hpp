#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pisa/experiments/experiments.hpp"
#include "pisa/synth/generator.hpp"

namespace pisa::app {

inline constexpr const char* kToolVersion = "1";

struct Paths {
  std::string catalog = "data/catalog.tsv";
  std::string events = "data/events.tsv";
  std::string out = "out";
  std::string embedding;  // embedding component file, for content models
};

struct SplitConfig {
  // Negative: use the two latest session days.
  std::int64_t val_day = -1;
  std::int64_t test_day = -1;
  std::int64_t window_seconds = 86400;
};

struct RunConfig {
  std::string version = kToolVersion;
  std::uint64_t seed = 1;
  int workers = 1;
  Paths paths;
  synth::GeneratorConfig generator;
  models::EmbeddingDims embedding_dims;
  models::TrainConfig embedding_train{20, 16, 0.001, 1};
  models::PredictorDims predictor_dims;
  models::TrainConfig train;
  SplitConfig split;
  experiments::Protocol protocol = experiments::Protocol::all_data;
  std::vector<double> x_list{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<models::ModelKind> models{models::ModelKind::content, models::ModelKind::integrated,
                                        models::ModelKind::baseline};
  double min_cold_ratio = 0.5;

  void validate() const;
  experiments::ExperimentConfig experiment_config() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown sections or keys are rejected.
RunConfig from_json(const nlohmann::json& j);

/// Replaces config values from PISA_<SECTION>_<KEY> environment variables
/// (e.g. PISA_TRAIN_MAX_EPOCHS=5). List values are comma separated.
void apply_env_overrides(nlohmann::json& j, const std::function<const char*(const char*)>& getenv_fn);

/// Defaults, then the file (if given), then the environment.
RunConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace pisa::app
