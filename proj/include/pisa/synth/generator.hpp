#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pisa/data/types.hpp"

namespace pisa::synth {

/// Knobs of the synthetic shop. Buy probability of a session is
/// sigmoid(logit(base_buy_rate) + beta * mean buyability of its clicked items),
/// and an item's buyability is the share of its category-signature tokens that
/// are buy-signal words.
struct GeneratorConfig {
  int n_categories = 13;
  int items_per_category = 20;
  int vocab_size = 600;  // signature words of all categories plus shared filler words
  int signature_words_per_category = 8;
  int n_users = 10000;
  int n_sessions = 20000;
  int n_days = 4;
  int min_session_length = 1;
  int max_session_length = 14;
  double length_decay = 3.0;  // P(L) proportional to exp(-L / length_decay)
  double base_buy_rate = 0.05;
  double beta = 6.0;  // content signal strength
  double hot_category_fraction = 0.15;  // categories whose items can carry buy-signal words
  double hot_item_fraction = 1.0;      // share of items in such a category that do
  double category_stickiness = 0.85;   // chance the next click stays in the current category
  double test_only_fraction = 0.0;     // items reserved for the last day's sessions
  std::int64_t start_timestamp = 1564617600;  // 2019-08-01T00:00:00Z
  std::uint64_t seed = 1;

  void validate() const;
  int filler_words() const { return vocab_size - n_categories * signature_words_per_category; }
};

struct SyntheticCatalog {
  data::Catalog catalog;
  std::vector<double> buyability;   // per catalog record
  std::vector<bool> test_only;      // per catalog record
  std::vector<int> hot_categories;  // 1-based ids
};

struct SyntheticSessions {
  std::vector<data::Session> sessions;  // ordered and numbered exactly as data::sessionize would
  std::vector<double> buy_probability;  // true generative probability per session
  std::vector<data::ItemId> bought_item;

  std::vector<data::Event> events() const;
};

SyntheticCatalog generate_catalog(const GeneratorConfig& cfg);
SyntheticSessions generate_sessions(const SyntheticCatalog& catalog, const GeneratorConfig& cfg);

/// AUC obtained by scoring each session with its true buy probability.
double bayes_oracle_auc(std::span<const data::Session> sessions, std::span<const double> buy_probability);

}  // namespace pisa::synth
