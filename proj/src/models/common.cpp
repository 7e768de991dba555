#include "pisa/models/common.hpp"

#include "pisa/common/errors.hpp"

namespace pisa::models {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::embedding_component:
      return "embedding_component";
    case ModelKind::content:
      return "content";
    case ModelKind::integrated:
      return "integrated";
    case ModelKind::baseline:
      return "baseline";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "embedding_component") return ModelKind::embedding_component;
  if (name == "content") return ModelKind::content;
  if (name == "integrated") return ModelKind::integrated;
  if (name == "baseline") return ModelKind::baseline;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
}

}  // namespace pisa::models
