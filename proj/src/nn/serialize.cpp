#include "pisa/nn/serialize.hpp"

#include <string>

namespace pisa::nn {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DataError("matrix: expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw DataError("matrix: ragged rows");
    for (Index c = 0; c < cols; ++c) {
      const auto& v = row.at(static_cast<std::size_t>(c));
      if (!v.is_number()) throw DataError("matrix: non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

nlohmann::json params_to_json(const ParamList& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const ParamTensor* p : params) j[p->name] = matrix_to_json(p->value);
  return j;
}

void params_from_json(const nlohmann::json& j, const ParamList& params) {
  if (!j.is_object()) throw DataError("params: expected an object");
  if (j.size() != params.size())
    throw DataError("params: expected " + std::to_string(params.size()) + " tensors, found " +
                    std::to_string(j.size()));
  for (ParamTensor* p : params) {
    if (!j.contains(p->name)) throw DataError("params: missing tensor " + p->name);
    Matrix m = matrix_from_json(j.at(p->name));
    if (m.rows() != p->rows() || m.cols() != p->cols())
      throw DataError("params: tensor " + p->name + " has shape " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(p->rows()) + "x" +
                      std::to_string(p->cols()));
    p->value = std::move(m);
    p->zero_grad();
    p->reset_optimizer();
  }
}

std::vector<Matrix> snapshot(const ParamList& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const ParamTensor* p : params) out.push_back(p->value);
  return out;
}

void restore(const ParamList& params, const std::vector<Matrix>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = values[k];
}

}  // namespace pisa::nn
