#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bunca/tensor.hpp"

namespace bunca {

// Ordered, uniquely named collection of trainable tensors.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  // Throws ConfigError on a duplicate name or an already registered tensor.
  void add(std::string name, Tensor tensor);

  bool contains(std::string_view name) const;
  // Throws FormatError naming the missing tensor.
  const Tensor& get(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  Index scalar_count() const;
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad() const;
  // Sum of squared entries over every tensor, as a differentiable scalar.
  Tensor squared_norm() const;

 private:
  std::vector<Entry> entries_;
};

// Runs the reverse sweep from a scalar loss and guarantees every parameter
// has a gradient slot afterwards (zero for parameters the loss ignores).
// Gradients accumulate across calls until zero_grad().
void compute_gradients(const Tensor& loss, const ParameterSet& params);

}  // namespace bunca
