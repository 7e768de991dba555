#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pisa/common/rng.hpp"
#include "pisa/nn/tensor.hpp"

namespace pisa::nn {

enum class Activation { identity, tanh, sigmoid };

/// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, Index fan_in, Index fan_out, Rng& rng);

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Dense

struct DenseCache {
  Matrix input;
  Matrix output;
};

/// Fully connected layer over row-batched input: Y = act(X W^T + b).
/// W is out x in, b is 1 x out.
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& prefix, Index in, Index out, Activation act);

  void init(Rng& rng);

  Index input_dim() const { return weight.cols(); }
  Index output_dim() const { return weight.rows(); }

  Matrix forward(const Matrix& x, DenseCache* cache = nullptr) const;
  /// Accumulates parameter gradients and returns dL/dX.
  Matrix backward(const Matrix& dy, const DenseCache& cache);

  ParamList parameters() { return {&weight, &bias}; }

  ParamTensor weight;
  ParamTensor bias;
  Activation activation = Activation::identity;
};

// ---------------------------------------------------------------------------
// GRU
//
// z = sigmoid(x W_z^T + h U_z^T + b_z)
// r = sigmoid(x W_r^T + h U_r^T + b_r)
// n = tanh(x W_h^T + (r * h) U_h^T + b_h)
// h' = (1 - z) * h + z * n

struct GruStepCache {
  Matrix x, h_prev, z, r, n;
};

struct GruCache {
  std::vector<GruStepCache> steps;
};

class Gru {
 public:
  Gru() = default;
  Gru(const std::string& prefix, Index in, Index hidden);

  void init(Rng& rng);

  Index input_dim() const { return W_z.cols(); }
  Index hidden_size() const { return U_z.rows(); }

  Matrix step(const Matrix& x, const Matrix& h_prev, GruStepCache* cache = nullptr) const;
  /// Runs all timesteps from h0; returns the final hidden state.
  Matrix forward(std::span<const Matrix> xs, const Matrix& h0, GruCache* cache = nullptr) const;
  /// Backpropagation through time from dL/dh_T. Returns dL/dx_t for every step.
  std::vector<Matrix> backward(const Matrix& dh_last, const GruCache& cache);

  ParamList parameters() { return {&W_h, &W_r, &W_z, &U_h, &U_r, &U_z, &b_h, &b_r, &b_z}; }

  ParamTensor W_z, W_r, W_h;
  ParamTensor U_z, U_r, U_h;
  ParamTensor b_z, b_r, b_h;
};

// ---------------------------------------------------------------------------
// LSTM (no peepholes)
//
// i, f, o = sigmoid(x W_k^T + h U_k^T + b_k);  g = tanh(x W_g^T + h U_g^T + b_g)
// c' = f * c + i * g;  h' = o * tanh(c')

struct LstmStepCache {
  Matrix x, h_prev, c_prev, i, f, o, g, tanh_c;
};

struct LstmCache {
  std::vector<LstmStepCache> steps;
};

struct LstmState {
  Matrix h;
  Matrix c;
};

class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& prefix, Index in, Index hidden);

  /// Glorot weights, zero biases except the forget gate (1.0).
  void init(Rng& rng);

  Index input_dim() const { return W_i.cols(); }
  Index hidden_size() const { return U_i.rows(); }

  LstmState step(const Matrix& x, const LstmState& prev, LstmStepCache* cache = nullptr) const;
  LstmState forward(std::span<const Matrix> xs, const LstmState& init, LstmCache* cache = nullptr) const;
  /// BPTT from dL/dh_T (the final cell state receives no external gradient).
  std::vector<Matrix> backward(const Matrix& dh_last, const LstmCache& cache);

  LstmState zero_state(Index batch) const {
    return {Matrix::Zero(batch, hidden_size()), Matrix::Zero(batch, hidden_size())};
  }

  ParamList parameters() {
    return {&W_f, &W_g, &W_i, &W_o, &U_f, &U_g, &U_i, &U_o, &b_f, &b_g, &b_i, &b_o};
  }

  ParamTensor W_i, W_f, W_o, W_g;
  ParamTensor U_i, U_f, U_o, U_g;
  ParamTensor b_i, b_f, b_o, b_g;
};

// ---------------------------------------------------------------------------
// Embedding lookup (one-hot times table, without materializing the one-hot)

class Embedding {
 public:
  Embedding() = default;
  Embedding(const std::string& name, Index rows, Index dim);

  void init(Rng& rng);

  Index size() const { return table.rows(); }
  Index dim() const { return table.cols(); }

  /// Gathers one row per id into a |ids| x dim matrix.
  Matrix forward(std::span<const int> ids) const;
  /// Scatter-adds each gradient row into the row it was read from.
  void backward(std::span<const int> ids, const Matrix& dy);

  ParamList parameters() { return {&table}; }

  ParamTensor table;
};

/// Row `token_id` of E.
RowVector embedding_lookup(int token_id, const Matrix& E);

}  // namespace pisa::nn
