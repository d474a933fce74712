#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bunca/params.hpp"

namespace bunca {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Relative error uses max(|analytic|, |numeric|, floor) as denominator so
  // that near-zero gradients are judged on an absolute scale.
  double floor = 1e-3;
  // Tensors larger than this are checked on a random subsample of this size.
  Index max_coords_per_tensor = 128;
  std::uint64_t seed = 0x5eed;
};

struct GradcheckEntry {
  std::string name;
  Index coords_checked = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compares reverse-mode gradients of loss_fn against central differences
// (f(x+h) - f(x-h)) / 2h. loss_fn must rebuild the graph from the current
// parameter values on every call. Throws NumericalError if two baseline
// evaluations disagree.
GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const ParameterSet& params,
                          const GradcheckOptions& options = {});

}  // namespace bunca
