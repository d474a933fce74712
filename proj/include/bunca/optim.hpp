#pragma once

#include <cstdint>
#include <vector>

#include "bunca/params.hpp"

namespace bunca {

// Uniform in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))], seeded mt19937_64.
Matrix xavier_init(Index rows, Index cols, std::uint64_t seed);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const ParameterSet& params);
};

// Bias-corrected Adam update. Zeroes gradients afterwards. Throws Error when a
// parameter has no gradient slot (compute_gradients was not run).
void adam_step(const ParameterSet& params, AdamState& state, const AdamConfig& config);

}  // namespace bunca
