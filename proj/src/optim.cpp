#include "bunca/optim.hpp"

#include <cmath>
#include <random>

#include "bunca/error.hpp"

namespace bunca {

Matrix xavier_init(Index rows, Index cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw DimensionError("xavier_init needs positive dimensions");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    // 53 random mantissa bits mapped to [0, 1); engine output is fully specified
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m.data()[i] = (2.0 * u - 1.0) * bound;
  }
  return m;
}

AdamState AdamState::for_params(const ParameterSet& params) {
  AdamState s;
  for (const auto& e : params) {
    s.first_moment.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
    s.second_moment.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
  }
  return s;
}

void adam_step(const ParameterSet& params, AdamState& state, const AdamConfig& config) {
  if (state.first_moment.size() != params.size()) throw DimensionError("Adam state does not match parameters");
  for (const auto& e : params) {
    if (e.tensor.grad().size() == 0 && e.tensor.value().size() != 0) {
      throw Error("missing gradient for parameter '" + e.name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  std::size_t k = 0;
  for (const auto& e : params) {
    Tensor p = e.tensor;
    const Matrix& g = p.grad();
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    if (m.rows() != g.rows() || m.cols() != g.cols()) {
      throw DimensionError("Adam moment shape differs for parameter '" + e.name + "'");
    }
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -=
        config.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
    p.zero_grad();
    ++k;
  }
}

}  // namespace bunca
