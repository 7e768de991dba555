#pragma once

#include <cstdint>

#include "pisa/nn/tensor.hpp"

namespace pisa::nn {

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;

  void validate() const;
};

/// One bias-corrected Adam update over every tensor, then zeroes the gradients
/// and increments cfg.step. Throws NumericError (and leaves everything untouched)
/// if any gradient is non-finite.
void adam_step(const ParamList& params, AdamConfig& cfg);

void zero_grads(const ParamList& params);

}  // namespace pisa::nn
