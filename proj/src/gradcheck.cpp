#include "bunca/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bunca/error.hpp"

namespace bunca {

GradcheckReport gradcheck(const std::function<Tensor()>& loss_fn, const ParameterSet& params,
                          const GradcheckOptions& options) {
  params.zero_grad();
  const Tensor loss = loss_fn();
  compute_gradients(loss, params);
  const double baseline = loss.item();
  if (loss_fn().item() != baseline) throw NumericalError("gradcheck: loss function is not deterministic");

  std::mt19937_64 rng(options.seed);
  GradcheckReport report;
  for (const auto& e : params) {
    Tensor p = e.tensor;
    const Matrix analytic = p.grad();
    const Index n = p.value().size();
    std::vector<Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (n > options.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(options.max_coords_per_tensor));
      std::sort(coords.begin(), coords.end());
    }
    GradcheckEntry entry{e.name, static_cast<Index>(coords.size()), 0.0, 0.0};
    for (Index c : coords) {
      double& x = p.mutable_value().data()[c];
      const double orig = x;
      x = orig + options.step;
      const double up = loss_fn().item();
      x = orig - options.step;
      const double down = loss_fn().item();
      x = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic.data()[c];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  params.zero_grad();
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace bunca
