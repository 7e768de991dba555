#pragma once

#include "pisa/nn/tensor.hpp"

namespace pisa::nn {

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  Vector probs;
  Vector grad_logits;  // probs - onehot(target)
};

/// Max-subtracted softmax followed by -ln(probs[target]).
SoftmaxCrossEntropy softmax_cross_entropy(const Vector& logits, Index target);

struct SigmoidBce {
  double loss = 0.0;
  double prob = 0.0;
  double grad_logit = 0.0;  // prob - label
};

/// Binary cross-entropy on a sigmoid unit, evaluated as max(z,0) - z*y + log1p(exp(-|z|)).
SigmoidBce sigmoid_bce(double logit, int label);

}  // namespace pisa::nn
