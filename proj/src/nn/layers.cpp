#include "pisa/nn/layers.hpp"

#include <cmath>

namespace pisa::nn {

namespace {

Matrix sigmoid_of(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

Matrix tanh_of(const Matrix& a) { return a.array().tanh().matrix(); }

// x W^T + h U^T + b, for one gate.
Matrix gate(const Matrix& x, const ParamTensor& W, const Matrix& h, const ParamTensor& U, const ParamTensor& b) {
  Matrix a(x.rows(), W.rows());
  a.noalias() = x * W.value.transpose();
  a.noalias() += h * U.value.transpose();
  a.rowwise() += b.value.row(0);
  return a;
}

void accumulate(ParamTensor& W, ParamTensor& U, ParamTensor& b, const Matrix& da, const Matrix& x, const Matrix& h) {
  W.grad.noalias() += da.transpose() * x;
  U.grad.noalias() += da.transpose() * h;
  b.grad.row(0) += da.colwise().sum();
}

void check_input(const Matrix& x, Index in, const char* layer) {
  require_shape(x.cols() == in, std::string(layer) + ": input has " + std::to_string(x.cols()) +
                                    " columns, expected " + std::to_string(in));
}

void check_state(const Matrix& h, Index batch, Index hidden, const char* layer) {
  require_shape(h.rows() == batch && h.cols() == hidden,
                std::string(layer) + ": state shape does not match batch x hidden");
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void glorot_uniform(Matrix& m, Index fan_in, Index fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-a, a);
}

// ---------------------------------------------------------------------------

Dense::Dense(const std::string& prefix, Index in, Index out, Activation act)
    : weight(prefix + ".W", out, in), bias(prefix + ".b", 1, out), activation(act) {}

void Dense::init(Rng& rng) {
  glorot_uniform(weight.value, input_dim(), output_dim(), rng);
  bias.value.setZero();
}

Matrix Dense::forward(const Matrix& x, DenseCache* cache) const {
  check_input(x, input_dim(), "dense");
  Matrix a(x.rows(), output_dim());
  a.noalias() = x * weight.value.transpose();
  a.rowwise() += bias.value.row(0);
  switch (activation) {
    case Activation::identity:
      break;
    case Activation::tanh:
      a = tanh_of(a);
      break;
    case Activation::sigmoid:
      a = sigmoid_of(a);
      break;
  }
  if (cache != nullptr) {
    cache->input = x;
    cache->output = a;
  }
  return a;
}

Matrix Dense::backward(const Matrix& dy, const DenseCache& cache) {
  if (cache.input.size() == 0) throw StateError("dense: backward called without a forward cache");
  require_shape(dy.rows() == cache.output.rows() && dy.cols() == cache.output.cols(),
                "dense: output gradient shape mismatch");
  Matrix da;
  switch (activation) {
    case Activation::identity:
      da = dy;
      break;
    case Activation::tanh:
      da = (dy.array() * (1.0 - cache.output.array().square())).matrix();
      break;
    case Activation::sigmoid:
      da = (dy.array() * cache.output.array() * (1.0 - cache.output.array())).matrix();
      break;
  }
  weight.grad.noalias() += da.transpose() * cache.input;
  bias.grad.row(0) += da.colwise().sum();
  Matrix dx(da.rows(), input_dim());
  dx.noalias() = da * weight.value;
  return dx;
}

// ---------------------------------------------------------------------------

Gru::Gru(const std::string& prefix, Index in, Index hidden)
    : W_z(prefix + ".W_z", hidden, in),
      W_r(prefix + ".W_r", hidden, in),
      W_h(prefix + ".W_h", hidden, in),
      U_z(prefix + ".U_z", hidden, hidden),
      U_r(prefix + ".U_r", hidden, hidden),
      U_h(prefix + ".U_h", hidden, hidden),
      b_z(prefix + ".b_z", 1, hidden),
      b_r(prefix + ".b_r", 1, hidden),
      b_h(prefix + ".b_h", 1, hidden) {}

void Gru::init(Rng& rng) {
  const Index in = input_dim();
  const Index h = hidden_size();
  for (ParamTensor* w : {&W_z, &W_r, &W_h}) glorot_uniform(w->value, in, h, rng);
  for (ParamTensor* u : {&U_z, &U_r, &U_h}) glorot_uniform(u->value, h, h, rng);
  for (ParamTensor* b : {&b_z, &b_r, &b_h}) b->value.setZero();
}

Matrix Gru::step(const Matrix& x, const Matrix& h_prev, GruStepCache* cache) const {
  check_input(x, input_dim(), "gru");
  check_state(h_prev, x.rows(), hidden_size(), "gru");
  Matrix z = sigmoid_of(gate(x, W_z, h_prev, U_z, b_z));
  Matrix r = sigmoid_of(gate(x, W_r, h_prev, U_r, b_r));
  Matrix rh = (r.array() * h_prev.array()).matrix();
  Matrix n = tanh_of(gate(x, W_h, rh, U_h, b_h));
  Matrix h = ((1.0 - z.array()) * h_prev.array() + z.array() * n.array()).matrix();
  if (cache != nullptr) *cache = GruStepCache{x, h_prev, std::move(z), std::move(r), std::move(n)};
  return h;
}

Matrix Gru::forward(std::span<const Matrix> xs, const Matrix& h0, GruCache* cache) const {
  if (cache != nullptr) cache->steps.assign(xs.size(), {});
  Matrix h = h0;
  for (std::size_t t = 0; t < xs.size(); ++t) h = step(xs[t], h, cache != nullptr ? &cache->steps[t] : nullptr);
  return h;
}

std::vector<Matrix> Gru::backward(const Matrix& dh_last, const GruCache& cache) {
  if (cache.steps.empty()) throw StateError("gru: backward called without a forward cache");
  std::vector<Matrix> dxs(cache.steps.size());
  Matrix dh = dh_last;
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const GruStepCache& s = cache.steps[t];
    require_shape(dh.rows() == s.h_prev.rows() && dh.cols() == s.h_prev.cols(), "gru: gradient shape mismatch");
    const auto z = s.z.array();
    const auto r = s.r.array();
    const auto n = s.n.array();
    const auto hp = s.h_prev.array();

    Matrix dz_a = (dh.array() * (n - hp) * z * (1.0 - z)).matrix();
    Matrix dn_a = (dh.array() * z * (1.0 - n.square())).matrix();
    Matrix dh_prev = (dh.array() * (1.0 - z)).matrix();

    Matrix rh = (r * hp).matrix();
    accumulate(W_h, U_h, b_h, dn_a, s.x, rh);
    Matrix d_rh(dn_a.rows(), hidden_size());
    d_rh.noalias() = dn_a * U_h.value;
    Matrix dr_a = (d_rh.array() * hp * r * (1.0 - r)).matrix();
    dh_prev.array() += d_rh.array() * r;

    accumulate(W_z, U_z, b_z, dz_a, s.x, s.h_prev);
    accumulate(W_r, U_r, b_r, dr_a, s.x, s.h_prev);
    dh_prev.noalias() += dz_a * U_z.value;
    dh_prev.noalias() += dr_a * U_r.value;

    Matrix dx(dh.rows(), input_dim());
    dx.noalias() = dz_a * W_z.value;
    dx.noalias() += dr_a * W_r.value;
    dx.noalias() += dn_a * W_h.value;
    dxs[t] = std::move(dx);
    dh = std::move(dh_prev);
  }
  return dxs;
}

// ---------------------------------------------------------------------------

Lstm::Lstm(const std::string& prefix, Index in, Index hidden)
    : W_i(prefix + ".W_i", hidden, in),
      W_f(prefix + ".W_f", hidden, in),
      W_o(prefix + ".W_o", hidden, in),
      W_g(prefix + ".W_g", hidden, in),
      U_i(prefix + ".U_i", hidden, hidden),
      U_f(prefix + ".U_f", hidden, hidden),
      U_o(prefix + ".U_o", hidden, hidden),
      U_g(prefix + ".U_g", hidden, hidden),
      b_i(prefix + ".b_i", 1, hidden),
      b_f(prefix + ".b_f", 1, hidden),
      b_o(prefix + ".b_o", 1, hidden),
      b_g(prefix + ".b_g", 1, hidden) {}

void Lstm::init(Rng& rng) {
  const Index in = input_dim();
  const Index h = hidden_size();
  for (ParamTensor* w : {&W_i, &W_f, &W_o, &W_g}) glorot_uniform(w->value, in, h, rng);
  for (ParamTensor* u : {&U_i, &U_f, &U_o, &U_g}) glorot_uniform(u->value, h, h, rng);
  for (ParamTensor* b : {&b_i, &b_o, &b_g}) b->value.setZero();
  b_f.value.setOnes();
}

LstmState Lstm::step(const Matrix& x, const LstmState& prev, LstmStepCache* cache) const {
  check_input(x, input_dim(), "lstm");
  check_state(prev.h, x.rows(), hidden_size(), "lstm");
  check_state(prev.c, x.rows(), hidden_size(), "lstm");
  Matrix i = sigmoid_of(gate(x, W_i, prev.h, U_i, b_i));
  Matrix f = sigmoid_of(gate(x, W_f, prev.h, U_f, b_f));
  Matrix o = sigmoid_of(gate(x, W_o, prev.h, U_o, b_o));
  Matrix g = tanh_of(gate(x, W_g, prev.h, U_g, b_g));
  LstmState next;
  next.c = (f.array() * prev.c.array() + i.array() * g.array()).matrix();
  Matrix tc = tanh_of(next.c);
  next.h = (o.array() * tc.array()).matrix();
  if (cache != nullptr)
    *cache = LstmStepCache{x, prev.h, prev.c, std::move(i), std::move(f), std::move(o), std::move(g), std::move(tc)};
  return next;
}

LstmState Lstm::forward(std::span<const Matrix> xs, const LstmState& init, LstmCache* cache) const {
  if (cache != nullptr) cache->steps.assign(xs.size(), {});
  LstmState s = init;
  for (std::size_t t = 0; t < xs.size(); ++t) s = step(xs[t], s, cache != nullptr ? &cache->steps[t] : nullptr);
  return s;
}

std::vector<Matrix> Lstm::backward(const Matrix& dh_last, const LstmCache& cache) {
  if (cache.steps.empty()) throw StateError("lstm: backward called without a forward cache");
  std::vector<Matrix> dxs(cache.steps.size());
  Matrix dh = dh_last;
  Matrix dc = Matrix::Zero(dh_last.rows(), hidden_size());
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const LstmStepCache& s = cache.steps[t];
    require_shape(dh.rows() == s.h_prev.rows() && dh.cols() == s.h_prev.cols(), "lstm: gradient shape mismatch");
    const auto i = s.i.array();
    const auto f = s.f.array();
    const auto o = s.o.array();
    const auto g = s.g.array();
    const auto tc = s.tanh_c.array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    Matrix do_a = (dh.array() * tc * o * (1.0 - o)).matrix();
    Matrix di_a = (dc.array() * g * i * (1.0 - i)).matrix();
    Matrix df_a = (dc.array() * s.c_prev.array() * f * (1.0 - f)).matrix();
    Matrix dg_a = (dc.array() * i * (1.0 - g.square())).matrix();

    accumulate(W_i, U_i, b_i, di_a, s.x, s.h_prev);
    accumulate(W_f, U_f, b_f, df_a, s.x, s.h_prev);
    accumulate(W_o, U_o, b_o, do_a, s.x, s.h_prev);
    accumulate(W_g, U_g, b_g, dg_a, s.x, s.h_prev);

    Matrix dx(dh.rows(), input_dim());
    dx.noalias() = di_a * W_i.value;
    dx.noalias() += df_a * W_f.value;
    dx.noalias() += do_a * W_o.value;
    dx.noalias() += dg_a * W_g.value;
    dxs[t] = std::move(dx);

    Matrix dh_prev(dh.rows(), hidden_size());
    dh_prev.noalias() = di_a * U_i.value;
    dh_prev.noalias() += df_a * U_f.value;
    dh_prev.noalias() += do_a * U_o.value;
    dh_prev.noalias() += dg_a * U_g.value;
    dh = std::move(dh_prev);
    dc = (dc.array() * f).matrix();
  }
  return dxs;
}

// ---------------------------------------------------------------------------

Embedding::Embedding(const std::string& name, Index rows, Index dim) : table(name, rows, dim) {}

void Embedding::init(Rng& rng) { glorot_uniform(table.value, table.rows(), table.cols(), rng); }

Matrix Embedding::forward(std::span<const int> ids) const {
  Matrix out(static_cast<Index>(ids.size()), dim());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= size())
      throw IndexError("embedding: id " + std::to_string(ids[k]) + " outside table of " + std::to_string(size()));
    out.row(static_cast<Index>(k)) = table.value.row(ids[k]);
  }
  return out;
}

void Embedding::backward(std::span<const int> ids, const Matrix& dy) {
  require_shape(dy.rows() == static_cast<Index>(ids.size()) && dy.cols() == dim(), "embedding: gradient shape mismatch");
  for (std::size_t k = 0; k < ids.size(); ++k) table.grad.row(ids[k]) += dy.row(static_cast<Index>(k));
}

RowVector embedding_lookup(int token_id, const Matrix& E) {
  if (token_id < 0 || token_id >= E.rows())
    throw IndexError("embedding_lookup: token " + std::to_string(token_id) + " outside vocabulary of " +
                     std::to_string(E.rows()));
  return E.row(token_id);
}

}  // namespace pisa::nn
