#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace bunca {

using Index = std::ptrdiff_t;

// Row-major so that entity rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace bunca
