#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pisa/app/config.hpp"
#include "pisa/data/sessions.hpp"

namespace pisa::app {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> protocol;
  std::optional<std::string> x_list;  // comma separated fractions
  std::optional<std::string> catalog;
  std::optional<std::string> events;
  std::optional<std::string> embedding;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

/// Exit codes of the command-line tool.
enum ExitCode { kOk = 0, kUsage = 2, kDataFailure = 3, kNumericFailure = 4 };

/// Maps a pisa exception to its exit code.
int exit_code_for(const std::exception& e);

struct LoadedData {
  data::Catalog catalog;
  data::Split split;
};

/// Reads catalog and events, sessionizes and splits chronologically.
LoadedData load_data(const RunConfig& cfg);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Adds (or refreshes) the given files in <dir>/manifest.json.
void update_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files);

// Each command writes under cfg.paths.out and logs a short summary to `log`.
void cmd_gen_data(const RunConfig& cfg, bool force, std::ostream& log);
void cmd_train_embed(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, models::ModelKind kind, std::ostream& log);
void cmd_evaluate(const RunConfig& cfg, const std::vector<std::string>& model_files, std::ostream& log);
void cmd_experiment(const RunConfig& cfg, std::ostream& log);

}  // namespace pisa::app
