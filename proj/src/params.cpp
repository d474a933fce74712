#include "bunca/params.hpp"

#include <algorithm>

#include "bunca/error.hpp"

namespace bunca {

void ParameterSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  for (const auto& e : entries_) {
    if (e.tensor.same_node(tensor)) throw ConfigError("tensor registered twice as '" + name + "'");
  }
  if (!tensor.requires_grad()) throw ConfigError("parameter '" + name + "' does not require gradients");
  entries_.push_back({std::move(name), std::move(tensor)});
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

const Tensor& ParameterSet::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw FormatError("unknown tensor name '" + std::string(name) + "'");
}

Index ParameterSet::scalar_count() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.tensor.rows() * e.tensor.cols();
  return n;
}

void ParameterSet::zero_grad() const {
  for (const auto& e : entries_) e.tensor.zero_grad();
}

Tensor ParameterSet::squared_norm() const {
  Tensor total(Matrix::Zero(1, 1));
  for (const auto& e : entries_) total = ops::add(total, ops::squared_norm(e.tensor));
  return total;
}

void compute_gradients(const Tensor& loss, const ParameterSet& params) {
  if (loss.rows() != 1 || loss.cols() != 1) throw DimensionError("loss must be a scalar");
  loss.backward();
  for (const auto& e : params) e.tensor.ensure_grad();
}

}  // namespace bunca
