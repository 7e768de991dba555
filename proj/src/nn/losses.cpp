#include "pisa/nn/losses.hpp"

#include <cmath>
#include <string>

#include "pisa/nn/layers.hpp"

namespace pisa::nn {

SoftmaxCrossEntropy softmax_cross_entropy(const Vector& logits, Index target) {
  if (target < 0 || target >= logits.size())
    throw IndexError("softmax_cross_entropy: target " + std::to_string(target) + " outside " +
                     std::to_string(logits.size()) + " classes");
  if (!logits.allFinite()) throw NumericError("softmax_cross_entropy: non-finite logits");
  const double mx = logits.maxCoeff();
  Vector shifted = logits.array() - mx;
  Vector e = shifted.array().exp();
  const double sum = e.sum();
  SoftmaxCrossEntropy out;
  out.probs = e / sum;
  out.loss = std::log(sum) - shifted(target);
  out.grad_logits = out.probs;
  out.grad_logits(target) -= 1.0;
  return out;
}

SigmoidBce sigmoid_bce(double logit, int label) {
  if (!std::isfinite(logit)) throw NumericError("sigmoid_bce: non-finite logit");
  const double y = label != 0 ? 1.0 : 0.0;
  SigmoidBce out;
  out.prob = sigmoid(logit);
  out.loss = std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
  out.grad_logit = out.prob - y;
  return out;
}

}  // namespace pisa::nn
