#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pisa::models {

inline constexpr int kFormatVersion = 1;

enum class ModelKind { embedding_component, content, integrated, baseline };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct TrainConfig {
  int max_epochs = 20;
  int batch_size = 128;
  double learning_rate = 0.001;
  std::uint64_t seed = 1;

  void validate() const;
};

}  // namespace pisa::models
