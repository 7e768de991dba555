#include "pisa/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "pisa/common/errors.hpp"
#include "pisa/common/rng.hpp"
#include "pisa/data/sessions.hpp"
#include "pisa/metrics/metrics.hpp"

namespace pisa::synth {

namespace {

constexpr std::uint64_t kWordStream = 1;
constexpr std::uint64_t kCatalogStream = 2;
constexpr std::uint64_t kSessionStream = 3;

// Pronounceable, distinct lowercase words: index -> three consonant-vowel syllables.
std::string synthetic_word(std::size_t index) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  const std::size_t syllables = consonants.size() * vowels.size();
  std::string w;
  for (int k = 0; k < 3; ++k) {
    const std::size_t s = index % syllables;
    index /= syllables;
    w.push_back(consonants[s / vowels.size()]);
    w.push_back(vowels[s % vowels.size()]);
  }
  return w;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k > 0) out.push_back(' ');
    out += words[k];
  }
  return out;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void GeneratorConfig::validate() const {
  if (n_categories < 2) throw ConfigError("generator: need at least 2 categories");
  if (items_per_category < 1) throw ConfigError("generator: items_per_category must be >= 1");
  if (signature_words_per_category < 2) throw ConfigError("generator: need >= 2 signature words per category");
  if (filler_words() < 20)
    throw ConfigError("generator: vocab_size " + std::to_string(vocab_size) + " too small for " +
                      std::to_string(n_categories) + " x " + std::to_string(signature_words_per_category) +
                      " signature words plus 20 filler words");
  if (n_users < 1 || n_sessions < 0 || n_days < 1) throw ConfigError("generator: counts must be positive");
  if (min_session_length < 1 || max_session_length < min_session_length)
    throw ConfigError("generator: session lengths must satisfy 1 <= min <= max");
  if (!(length_decay > 0.0)) throw ConfigError("generator: length_decay must be positive");
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!(base_buy_rate > 0.0 && base_buy_rate < 1.0)) throw ConfigError("generator: base_buy_rate must lie in (0, 1)");
  if (!in_unit(hot_category_fraction) || !in_unit(hot_item_fraction) || !in_unit(category_stickiness) ||
      !(test_only_fraction >= 0.0 && test_only_fraction < 1.0))
    throw ConfigError("generator: fractions must lie in [0, 1]");
  if (!(beta >= 0.0)) throw ConfigError("generator: beta must be >= 0");
  if (start_timestamp % data::kSecondsPerDay != 0) throw ConfigError("generator: start_timestamp must be midnight UTC");
  const int per_day = (n_sessions + n_days - 1) / n_days;
  if (n_users < per_day)
    throw ConfigError("generator: n_users must be >= sessions per day (" + std::to_string(per_day) + ")");
}

SyntheticCatalog generate_catalog(const GeneratorConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng word_rng = root.split(kWordStream);
  Rng rng = root.split(kCatalogStream);

  const int K = cfg.n_categories;
  const int S = cfg.signature_words_per_category;
  const int buy_words = (S + 1) / 2;

  std::vector<std::size_t> word_ids(static_cast<std::size_t>(cfg.vocab_size));
  std::iota(word_ids.begin(), word_ids.end(), 0);
  word_rng.shuffle(word_ids);
  std::vector<std::string> words;
  words.reserve(word_ids.size());
  for (const auto id : word_ids) words.push_back(synthetic_word(id));
  // words[c*S .. c*S+S) belong to category c; the first buy_words of those are buy-signal words.
  const std::size_t filler_begin = static_cast<std::size_t>(K * S);
  const std::size_t n_filler = words.size() - filler_begin;

  SyntheticCatalog out;
  const int n_hot_categories =
      cfg.hot_category_fraction > 0.0 ? std::max(1, static_cast<int>(std::lround(cfg.hot_category_fraction * K))) : 0;
  std::vector<bool> hot_category(static_cast<std::size_t>(K), false);
  for (const auto c : rng.sample_without_replacement(static_cast<std::size_t>(K), static_cast<std::size_t>(n_hot_categories))) {
    hot_category[c] = true;
    out.hot_categories.push_back(static_cast<int>(c) + 1);
  }
  std::sort(out.hot_categories.begin(), out.hot_categories.end());

  std::vector<data::CatalogRecord> records;
  std::uint64_t next_id = 1;
  for (int c = 0; c < K; ++c) {
    const std::size_t ipc = static_cast<std::size_t>(cfg.items_per_category);
    std::vector<bool> hot(ipc, false);
    if (hot_category[static_cast<std::size_t>(c)]) {
      const auto n_hot = static_cast<std::size_t>(std::floor(cfg.hot_item_fraction * static_cast<double>(ipc)));
      for (const auto i : rng.sample_without_replacement(ipc, n_hot)) hot[i] = true;
    }
    // Test-only items are stratified so hot and plain items are both represented.
    std::vector<bool> test_only(ipc, false);
    for (const bool want_hot : {true, false}) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < ipc; ++i)
        if (hot[i] == want_hot) group.push_back(i);
      const auto k = static_cast<std::size_t>(std::floor(cfg.test_only_fraction * static_cast<double>(group.size())));
      for (const auto g : rng.sample_without_replacement(group.size(), k)) test_only[group[g]] = true;
    }

    for (std::size_t i = 0; i < ipc; ++i) {
      const std::size_t pool_begin = static_cast<std::size_t>(c * S) + (hot[i] ? 0 : static_cast<std::size_t>(buy_words));
      const std::size_t pool_size = static_cast<std::size_t>(hot[i] ? buy_words : S - buy_words);
      auto signature = [&] { return pool_begin + rng.below(pool_size); };
      auto filler = [&] { return filler_begin + rng.below(n_filler); };

      int sig_tokens = 0, buy_tokens = 0;
      auto count = [&](std::size_t w) {
        if (w < filler_begin) {
          ++sig_tokens;
          if (static_cast<int>(w % static_cast<std::size_t>(S)) < buy_words) ++buy_tokens;
        }
      };

      std::vector<std::string> title;
      const int title_len = rng.range(1, 4);
      for (int k = 0; k < title_len; ++k) {
        const std::size_t w = k == 0 ? signature() : filler();
        count(w);
        std::string t = words[w];
        t[0] = static_cast<char>(t[0] - 'a' + 'A');
        title.push_back(std::move(t));
      }

      const int desc_len = rng.range(6, 16);
      const int n_sig = rng.range(3, 5);
      std::vector<bool> is_sig(static_cast<std::size_t>(desc_len), false);
      for (const auto p : rng.sample_without_replacement(static_cast<std::size_t>(desc_len), static_cast<std::size_t>(n_sig)))
        is_sig[p] = true;
      std::vector<std::string> desc;
      for (int k = 0; k < desc_len; ++k) {
        const std::size_t w = is_sig[static_cast<std::size_t>(k)] ? signature() : filler();
        count(w);
        desc.push_back(words[w]);
      }

      records.push_back(data::CatalogRecord{data::ItemId{next_id++}, c + 1, join(title), join(desc) + "."});
      out.buyability.push_back(sig_tokens == 0 ? 0.0 : static_cast<double>(buy_tokens) / sig_tokens);
      out.test_only.push_back(test_only[i]);
    }
  }
  out.catalog = data::Catalog(std::move(records));
  return out;
}

SyntheticSessions generate_sessions(const SyntheticCatalog& sc, const GeneratorConfig& cfg) {
  cfg.validate();
  if (sc.catalog.empty()) throw DataError("generate_sessions: empty catalog");
  Rng rng = Rng(cfg.seed).split(kSessionStream);

  const auto& records = sc.catalog.records();
  const int K = sc.catalog.max_category();
  const bool has_test_only = std::any_of(sc.test_only.begin(), sc.test_only.end(), [](bool b) { return b; });

  // pools[test_only][category] -> record indices
  std::vector<std::vector<std::vector<std::size_t>>> pools(2, std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(K)));
  for (std::size_t i = 0; i < records.size(); ++i)
    pools[sc.test_only[i] ? 1 : 0][static_cast<std::size_t>(records[i].category - 1)].push_back(i);

  std::vector<double> length_weights;
  for (int L = cfg.min_session_length; L <= cfg.max_session_length; ++L)
    length_weights.push_back(std::exp(-static_cast<double>(L) / cfg.length_decay));
  const double weight_sum = std::accumulate(length_weights.begin(), length_weights.end(), 0.0);
  auto draw_length = [&] {
    double u = rng.uniform() * weight_sum;
    for (std::size_t k = 0; k < length_weights.size(); ++k) {
      if (u < length_weights[k]) return cfg.min_session_length + static_cast<int>(k);
      u -= length_weights[k];
    }
    return cfg.max_session_length;
  };

  std::vector<data::Timestamp> user_offset(static_cast<std::size_t>(cfg.n_users));
  for (auto& o : user_offset) o = static_cast<data::Timestamp>(rng.below(12 * 3600));

  const double base_logit = logit(cfg.base_buy_rate);
  struct Draft {
    data::Session session;
    double prob;
    data::ItemId bought;
  };
  std::vector<Draft> drafts;
  drafts.reserve(static_cast<std::size_t>(cfg.n_sessions));

  for (int d = 0; d < cfg.n_days; ++d) {
    const int count = cfg.n_sessions / cfg.n_days + (d < cfg.n_sessions % cfg.n_days ? 1 : 0);
    const auto& pool = pools[has_test_only && d == cfg.n_days - 1 ? 1 : 0];
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < pool.size(); ++c)
      if (!pool[c].empty()) active.push_back(c);
    if (active.empty()) throw DataError("generate_sessions: no items available for day " + std::to_string(d));

    const auto users = rng.sample_without_replacement(static_cast<std::size_t>(cfg.n_users), static_cast<std::size_t>(count));
    for (const std::size_t u : users) {
      data::Session s;
      s.user = data::UserId{u + 1};
      data::Timestamp t = cfg.start_timestamp + d * data::kSecondsPerDay + user_offset[u] + d;
      const int L = draw_length();
      std::size_t cat = active[rng.below(active.size())];
      double b_sum = 0.0;
      for (int k = 0; k < L; ++k) {
        if (k > 0) {
          t += rng.range(30, 600);
          if (!rng.bernoulli(cfg.category_stickiness)) cat = active[rng.below(active.size())];
        }
        const auto& items = pool[cat];
        const std::size_t rec = items[rng.below(items.size())];
        b_sum += sc.buyability[rec];
        s.clicks.push_back(data::ClickEvent{records[rec].id, t, s.user});
      }
      const double prob = cfg.beta == 0.0 ? cfg.base_buy_rate : 1.0 / (1.0 + std::exp(-(base_logit + cfg.beta * b_sum / L)));
      s.label = rng.bernoulli(prob) ? 1 : 0;
      s.day = data::day_of(s.clicks.front().timestamp);
      const data::ItemId bought = s.clicks[rng.below(s.clicks.size())].item;
      drafts.push_back(Draft{std::move(s), prob, bought});
    }
  }

  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    const auto ta = a.session.clicks.front().timestamp, tb = b.session.clicks.front().timestamp;
    if (ta != tb) return ta < tb;
    return data::raw(a.session.user) < data::raw(b.session.user);
  });
  SyntheticSessions out;
  for (std::size_t k = 0; k < drafts.size(); ++k) {
    drafts[k].session.id = k;
    out.sessions.push_back(std::move(drafts[k].session));
    out.buy_probability.push_back(drafts[k].prob);
    out.bought_item.push_back(drafts[k].bought);
  }
  return out;
}

std::vector<data::Event> SyntheticSessions::events() const { return data::events_from_sessions(sessions, bought_item); }

double bayes_oracle_auc(std::span<const data::Session> sessions, std::span<const double> buy_probability) {
  if (sessions.size() != buy_probability.size()) throw DataError("bayes_oracle_auc: one probability per session");
  std::vector<int> labels;
  labels.reserve(sessions.size());
  for (const auto& s : sessions) labels.push_back(s.label);
  return metrics::auc(metrics::ScoredSet{buy_probability, labels});
}

}  // namespace pisa::synth
