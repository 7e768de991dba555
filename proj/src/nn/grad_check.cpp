#include "pisa/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pisa/nn/adam.hpp"

namespace pisa::nn {

GradCheckResult grad_check(const LossFunction& loss, const ParamList& params, double epsilon) {
  zero_grads(params);
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const ParamTensor* p : params) analytic.push_back(p->grad);
  zero_grads(params);

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor& p = *params[k];
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) {
        const double saved = p.value(r, c);
        auto at = [&](double offset) {
          p.value(r, c) = saved + offset;
          return loss(false);
        };
        const double numeric =
            (8.0 * (at(epsilon) - at(-epsilon)) - (at(2.0 * epsilon) - at(-2.0 * epsilon))) / (12.0 * epsilon);
        p.value(r, c) = saved;

        const double a = analytic[k](r, c);
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        ++result.entries_checked;
        if (err > result.max_relative_error) {
          result.max_relative_error = err;
          result.worst_param = p.name;
          result.worst_row = r;
          result.worst_col = c;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace pisa::nn
