#include "pisa/nn/adam.hpp"

#include <cmath>

namespace pisa::nn {

void AdamConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
}

void adam_step(const ParamList& params, AdamConfig& cfg) {
  cfg.validate();
  for (const ParamTensor* p : params)
    if (!p->grad.allFinite()) throw NumericError("adam: non-finite gradient in " + p->name);

  const double t = static_cast<double>(cfg.step + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (ParamTensor* p : params) {
    p->adam_m = cfg.beta1 * p->adam_m + (1.0 - cfg.beta1) * p->grad;
    p->adam_v = cfg.beta2 * p->adam_v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
    p->value.array() -=
        cfg.alpha * (p->adam_m.array() / c1) / ((p->adam_v.array() / c2).sqrt() + cfg.epsilon);
    p->grad.setZero();
  }
  ++cfg.step;
}

void zero_grads(const ParamList& params) {
  for (ParamTensor* p : params) p->zero_grad();
}

}  // namespace pisa::nn
