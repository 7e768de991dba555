#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pisa/data/types.hpp"
#include "pisa/metrics/metrics.hpp"
#include "pisa/models/embedding.hpp"
#include "pisa/models/predictors.hpp"
#include "pisa/models/training.hpp"

namespace pisa::experiments {

using ItemSet = std::set<data::ItemId>;

struct ColdStartConfig {
  double removal_fraction = 0.0;  // X
  std::uint64_t seed = 1;

  void validate() const;
};

struct ColdRemoval {
  std::vector<data::Session> train;
  ItemSet removed;
};

/// Per category, samples floor(X * n) of the n items that occur in the train
/// sessions and drops every train session containing one of them. Samples for
/// a larger X extend those for a smaller X under the same seed.
ColdRemoval remove_cold_items(std::span<const data::Session> train, const data::Catalog& catalog,
                              const ColdStartConfig& cfg);

/// Drops n_remove uniformly chosen sessions, keeping the order of the rest.
std::vector<data::Session> random_removal(std::span<const data::Session> train, std::size_t n_remove,
                                          std::uint64_t seed);

/// Every item id clicked in any of the sessions.
ItemSet item_universe(std::span<const data::Session> sessions);

struct SessionColdness {
  std::uint64_t session_id = 0;
  std::size_t cold_item_count = 0;  // clicks on items outside the universe
  std::size_t total_items = 0;      // clicks
  bool is_cold = false;
  double cold_ratio = 0.0;
};

std::vector<SessionColdness> classify_sessions(std::span<const data::Session> test, const ItemSet& universe);

struct ColdFilter {
  enum class Mode { no_cold, min_ratio };
  Mode mode = Mode::no_cold;
  double min_ratio = 0.5;
};

struct FilterResult {
  std::vector<std::uint64_t> session_ids;
  std::optional<std::string> warning;  // set when nothing is kept
};

FilterResult filter_test_by_cold_ratio(std::span<const SessionColdness> coldness, const ColdFilter& filter);

// ---------------------------------------------------------------------------
// Per-category analysis

struct CategoryRow {
  int category = 0;
  std::size_t item_count = 0;
  double mean_description_length = 0.0;  // words
  std::size_t session_count = 0;
  std::size_t positives = 0;
  std::vector<std::optional<double>> auc;  // per model; empty when the category has one class
  bool auc_defined = false;
};

struct CategoryReport {
  std::vector<std::string> models;
  std::vector<CategoryRow> rows;  // ascending category id, every catalog category
};

/// Category of a session: the most clicked category, ties to the lowest id.
int session_category(const data::Session& session, const data::Catalog& catalog);

CategoryReport per_category_report(std::span<const data::Session> test, const data::Catalog& catalog,
                                   std::span<const std::string> model_names,
                                   std::span<const std::vector<double>> model_scores);

// ---------------------------------------------------------------------------
// Protocol runner

enum class Protocol { all_data, cold_start, random_removal };

std::string to_string(Protocol p);
Protocol parse_protocol(std::string_view name);

struct ExperimentConfig {
  Protocol protocol = Protocol::all_data;
  std::vector<double> x_list{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<models::ModelKind> models{models::ModelKind::content, models::ModelKind::integrated,
                                        models::ModelKind::baseline};
  models::EmbeddingDims embedding_dims{};
  models::TrainConfig embedding_train{};
  models::PredictorDims predictor_dims{};
  models::TrainConfig train{};
  std::uint64_t seed = 1;
  int workers = 1;
  double min_cold_ratio = 0.5;
  bool keep_models = true;  // keep serialized models in the report

  void validate() const;
};

struct ExperimentData {
  data::Catalog catalog;
  std::vector<data::Session> train;
  std::vector<data::Session> validation;
  std::vector<data::Session> test;
};

struct SubsetMetrics {
  std::string name;
  std::size_t sessions = 0;
  std::optional<double> auc;  // unset when the subset has a single class
  std::optional<double> ap;
};

struct ModelResult {
  models::ModelKind kind = models::ModelKind::content;
  double auc = 0.0;
  double ap = 0.0;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  std::vector<models::EpochRecord> trace;
  std::vector<double> scores;  // per test session
  std::vector<metrics::RocPoint> roc;
  std::vector<SubsetMetrics> subsets;
  nlohmann::json model;
};

struct PairTest {
  models::ModelKind a;
  models::ModelKind b;
  metrics::DeLongResult result;
};

struct ConditionResult {
  std::string label;
  double x = 0.0;
  std::uint64_t seed = 0;
  std::size_t removed_items = 0;
  std::size_t removed_sessions = 0;
  std::size_t train_sessions = 0;
  double train_buy_pct = 0.0;
  std::size_t cold_sessions = 0;
  double cold_buy_pct = 0.0;
  std::size_t warm_sessions = 0;
  double warm_buy_pct = 0.0;
  double pct_cold = 0.0;
  int embedding_best_epoch = 0;
  double embedding_heldout_accuracy = 0.0;
  std::vector<ModelResult> models;
  std::vector<PairTest> delong;
  CategoryReport categories;
  std::vector<std::string> warnings;
  nlohmann::json embedding_component;
};

struct ExperimentReport {
  Protocol protocol = Protocol::all_data;
  std::uint64_t seed = 0;
  std::size_t test_sessions = 0;
  double test_buy_pct = 0.0;
  std::vector<ConditionResult> conditions;
};

/// Conditions: one for all_data, one per X otherwise. Each reduces the train
/// set, retrains the embedding component on the items left in it and every
/// requested model, and evaluates on the untouched test set. Conditions run
/// on up to cfg.workers threads; results are kept in condition order.
ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg);

/// Runs one condition (index into the condition list).
ConditionResult run_condition(const ExperimentData& data, const ExperimentConfig& cfg, std::size_t index);

// ---------------------------------------------------------------------------
// Report files

void write_report_text(const ExperimentReport& report, std::ostream& out);
void write_report_csv(const ExperimentReport& report, std::ostream& out);
void write_roc_csv(std::span<const metrics::RocPoint> roc, std::ostream& out);
void write_category_csv(const CategoryReport& report, std::ostream& out);
void write_trace_csv(std::span<const models::EpochRecord> trace, std::ostream& out);

/// Writes report.txt, report.csv, roc_*.csv, categories_*.csv, traces and
/// model files under dir. Returns the relative paths written, in order.
std::vector<std::string> write_experiment_outputs(const ExperimentReport& report, const std::string& dir);

/// printf("%.17g") for CSV cells.
std::string format_real(double v);

}  // namespace pisa::experiments
