#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pisa/common/errors.hpp"

namespace pisa::nn {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// A trainable matrix with its gradient and Adam moments, all of identical shape.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  ParamTensor() = default;
  ParamTensor(std::string n, Index rows, Index cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        adam_m(Matrix::Zero(rows, cols)),
        adam_v(Matrix::Zero(rows, cols)) {}

  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
  void zero_grad() { grad.setZero(); }
  void reset_optimizer() {
    adam_m.setZero();
    adam_v.setZero();
  }
};

using ParamList = std::vector<ParamTensor*>;

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace pisa::nn
