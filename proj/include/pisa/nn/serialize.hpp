#pragma once

#include <json.hpp>

#include "pisa/nn/tensor.hpp"

namespace pisa::nn {

/// Matrix as nested row-major arrays.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

/// {name: matrix} for every tensor. Keys come out sorted (nlohmann::json objects
/// are ordered maps), which fixes the field order of model files.
nlohmann::json params_to_json(const ParamList& params);

/// Loads values by name; every tensor must be present with its current shape.
/// Optimizer state and gradients are reset.
void params_from_json(const nlohmann::json& j, const ParamList& params);

/// Copies of parameter values, for best-epoch snapshots.
std::vector<Matrix> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<Matrix>& values);

}  // namespace pisa::nn
