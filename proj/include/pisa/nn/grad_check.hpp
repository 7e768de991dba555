#pragma once

#include <functional>
#include <string>

#include "pisa/nn/tensor.hpp"

namespace pisa::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  Index worst_row = 0;
  Index worst_col = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// `loss(true)` must return the loss and accumulate analytic gradients into the
/// params' grad fields; `loss(false)` must return the loss only.
using LossFunction = std::function<double(bool with_grad)>;

/// Compares every analytic gradient entry with the five-point central difference
/// (8(L(θ+ε) - L(θ-ε)) - (L(θ+2ε) - L(θ-2ε))) / 12ε and reports
/// max |a-n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const LossFunction& loss, const ParamList& params, double epsilon = 1e-4);

}  // namespace pisa::nn
