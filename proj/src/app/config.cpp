#include "pisa/app/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pisa/common/errors.hpp"

namespace pisa::app {

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

nlohmann::json parse_scalar(const std::string& text, const nlohmann::json& like, const std::string& where) {
  try {
    std::size_t used = 0;
    nlohmann::json v;
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("");
    } else if (like.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') throw ConfigError("");
      v = std::stoull(text, &used);
    } else if (like.is_number_integer()) {
      v = std::stoll(text, &used);
    } else if (like.is_number_float()) {
      v = std::stod(text, &used);
    } else {
      return text;
    }
    if (used != text.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": cannot parse '" + text + "'");
  }
}

template <typename T>
T get(const nlohmann::json& section, const char* key) {
  try {
    return section.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (version != kToolVersion)
    throw ConfigError("config version '" + version + "' does not match tool version '" + kToolVersion + "'");
  if (workers < 1) throw ConfigError("run.workers must be >= 1");
  generator.validate();
  embedding_train.validate();
  train.validate();
  if (split.window_seconds < 1) throw ConfigError("split.window_seconds must be positive");
  if ((split.val_day < 0) != (split.test_day < 0))
    throw ConfigError("split: set both val_day and test_day, or neither");
  experiment_config().validate();
}

experiments::ExperimentConfig RunConfig::experiment_config() const {
  experiments::ExperimentConfig e;
  e.protocol = protocol;
  e.x_list = x_list;
  e.models = models;
  e.embedding_dims = embedding_dims;
  e.embedding_train = embedding_train;
  e.predictor_dims = predictor_dims;
  e.train = train;
  e.seed = seed;
  e.workers = workers;
  e.min_cold_ratio = min_cold_ratio;
  return e;
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& g = c.generator;
  nlohmann::json models = nlohmann::json::array();
  for (const auto m : c.models) models.push_back(models::to_string(m));
  return {
      {"version", c.version},
      {"run", {{"seed", c.seed}, {"workers", c.workers}}},
      {"paths", {{"catalog", c.paths.catalog}, {"events", c.paths.events}, {"out", c.paths.out},
                 {"embedding", c.paths.embedding}}},
      {"generator",
       {{"n_categories", g.n_categories},
        {"items_per_category", g.items_per_category},
        {"vocab_size", g.vocab_size},
        {"signature_words_per_category", g.signature_words_per_category},
        {"n_users", g.n_users},
        {"n_sessions", g.n_sessions},
        {"n_days", g.n_days},
        {"min_session_length", g.min_session_length},
        {"max_session_length", g.max_session_length},
        {"length_decay", g.length_decay},
        {"base_buy_rate", g.base_buy_rate},
        {"beta", g.beta},
        {"hot_category_fraction", g.hot_category_fraction},
        {"hot_item_fraction", g.hot_item_fraction},
        {"category_stickiness", g.category_stickiness},
        {"test_only_fraction", g.test_only_fraction},
        {"start_timestamp", g.start_timestamp}}},
      {"embedding",
       {{"word_dim", c.embedding_dims.word_dim},
        {"gru_hidden", c.embedding_dims.gru_hidden},
        {"embed_dim", c.embedding_dims.embed_dim},
        {"categories", c.embedding_dims.categories},
        {"max_epochs", c.embedding_train.max_epochs},
        {"batch_size", c.embedding_train.batch_size},
        {"learning_rate", c.embedding_train.learning_rate}}},
      {"predictor",
       {{"id_dim", c.predictor_dims.id_dim},
        {"lstm_hidden", c.predictor_dims.lstm_hidden},
        {"merge_dim", c.predictor_dims.merge_dim},
        {"max_len", c.predictor_dims.max_len}}},
      {"train",
       {{"max_epochs", c.train.max_epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate}}},
      {"split",
       {{"val_day", c.split.val_day}, {"test_day", c.split.test_day}, {"window_seconds", c.split.window_seconds}}},
      {"experiment",
       {{"protocol", experiments::to_string(c.protocol)},
        {"x_list", c.x_list},
        {"models", models},
        {"min_cold_ratio", c.min_cold_ratio}}},
  };
}

namespace {

// Overlays `user` onto the defaults, rejecting unknown keys and type changes.
nlohmann::json merge_onto_defaults(const nlohmann::json& user) {
  nlohmann::json merged = to_json(RunConfig{});
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [section, value] : user.items()) {
    if (!merged.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    auto& target = merged[section];
    if (!target.is_object()) {
      if (!value.is_string()) throw ConfigError("config '" + section + "' must be a string");
      target = value;
      continue;
    }
    if (!value.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, v] : value.items()) {
      if (!target.contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
      const auto& old = target[key];
      const bool ok = (old.is_number() && v.is_number()) || old.type() == v.type();
      if (!ok) throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
      target[key] = v;
    }
  }
  return merged;
}

RunConfig parse_merged(const nlohmann::json& j) {
  RunConfig c;
  c.version = get<std::string>(j, "version");
  const auto& run = j.at("run");
  c.seed = get<std::uint64_t>(run, "seed");
  c.workers = get<int>(run, "workers");
  const auto& p = j.at("paths");
  c.paths = {get<std::string>(p, "catalog"), get<std::string>(p, "events"), get<std::string>(p, "out"),
             get<std::string>(p, "embedding")};
  const auto& g = j.at("generator");
  auto& gc = c.generator;
  gc.n_categories = get<int>(g, "n_categories");
  gc.items_per_category = get<int>(g, "items_per_category");
  gc.vocab_size = get<int>(g, "vocab_size");
  gc.signature_words_per_category = get<int>(g, "signature_words_per_category");
  gc.n_users = get<int>(g, "n_users");
  gc.n_sessions = get<int>(g, "n_sessions");
  gc.n_days = get<int>(g, "n_days");
  gc.min_session_length = get<int>(g, "min_session_length");
  gc.max_session_length = get<int>(g, "max_session_length");
  gc.length_decay = get<double>(g, "length_decay");
  gc.base_buy_rate = get<double>(g, "base_buy_rate");
  gc.beta = get<double>(g, "beta");
  gc.hot_category_fraction = get<double>(g, "hot_category_fraction");
  gc.hot_item_fraction = get<double>(g, "hot_item_fraction");
  gc.category_stickiness = get<double>(g, "category_stickiness");
  gc.test_only_fraction = get<double>(g, "test_only_fraction");
  gc.start_timestamp = get<std::int64_t>(g, "start_timestamp");
  gc.seed = c.seed;
  const auto& e = j.at("embedding");
  c.embedding_dims.word_dim = get<int>(e, "word_dim");
  c.embedding_dims.gru_hidden = get<int>(e, "gru_hidden");
  c.embedding_dims.embed_dim = get<int>(e, "embed_dim");
  c.embedding_dims.categories = get<int>(e, "categories");
  c.embedding_train.max_epochs = get<int>(e, "max_epochs");
  c.embedding_train.batch_size = get<int>(e, "batch_size");
  c.embedding_train.learning_rate = get<double>(e, "learning_rate");
  c.embedding_train.seed = c.seed;
  const auto& pr = j.at("predictor");
  c.predictor_dims.content_dim = c.embedding_dims.embed_dim;
  c.predictor_dims.id_dim = get<int>(pr, "id_dim");
  c.predictor_dims.lstm_hidden = get<int>(pr, "lstm_hidden");
  c.predictor_dims.merge_dim = get<int>(pr, "merge_dim");
  c.predictor_dims.max_len = get<int>(pr, "max_len");
  const auto& t = j.at("train");
  c.train.max_epochs = get<int>(t, "max_epochs");
  c.train.batch_size = get<int>(t, "batch_size");
  c.train.learning_rate = get<double>(t, "learning_rate");
  c.train.seed = c.seed;
  const auto& s = j.at("split");
  c.split = {get<std::int64_t>(s, "val_day"), get<std::int64_t>(s, "test_day"), get<std::int64_t>(s, "window_seconds")};
  const auto& x = j.at("experiment");
  c.protocol = experiments::parse_protocol(get<std::string>(x, "protocol"));
  c.x_list = get<std::vector<double>>(x, "x_list");
  c.models.clear();
  for (const auto& m : get<std::vector<std::string>>(x, "models")) c.models.push_back(models::parse_model_kind(m));
  c.min_cold_ratio = get<double>(x, "min_cold_ratio");
  return c;
}

}  // namespace

RunConfig from_json(const nlohmann::json& j) {
  auto c = parse_merged(merge_onto_defaults(j));
  c.validate();
  return c;
}

void apply_env_overrides(nlohmann::json& j, const std::function<const char*(const char*)>& getenv_fn) {
  for (auto& [section, body] : j.items()) {
    if (!body.is_object()) continue;
    for (auto& [key, value] : body.items()) {
      const std::string name = "PISA_" + upper(section) + "_" + upper(key);
      const char* raw = getenv_fn(name.c_str());
      if (!raw) continue;
      const std::string text(raw);
      if (value.is_array()) {
        const nlohmann::json like = value.empty() ? nlohmann::json("") : value.front();
        nlohmann::json list = nlohmann::json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) list.push_back(parse_scalar(item, like, name));
        value = list;
      } else {
        value = parse_scalar(text, value, name);
      }
    }
  }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path) {
  nlohmann::json user = nlohmann::json::object();
  if (path) {
    std::ifstream f(*path);
    if (!f) throw ConfigError("cannot open config file " + path->string());
    try {
      user = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path->string() + ": " + e.what());
    }
  }
  nlohmann::json merged = merge_onto_defaults(user);
  apply_env_overrides(merged, [](const char* n) { return std::getenv(n); });
  RunConfig c = parse_merged(merged);
  c.validate();
  return c;
}

}  // namespace pisa::app
