#include "bunca/objectives.hpp"

#include "bunca/error.hpp"

namespace bunca {

namespace {

void require_tau(double tau) {
  if (!(tau > 0.0)) throw ConfigError("temperature tau must be positive");
}

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
}

}  // namespace

void ObjectiveConfig::validate() const {
  require_tau(tau);
  require_unit(gamma, "gamma");
  require_unit(mu, "mu");
  if (!(lambda1 >= 0.0)) throw ConfigError("lambda1 must be non-negative");
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be non-negative");
}

Tensor discrete_contrastive(const Tensor& sv, const Tensor& rv, double tau) {
  require_tau(tau);
  if (sv.rows() < 1 || sv.rows() != rv.rows() || sv.cols() != rv.cols()) {
    throw DimensionError("discrete contrastive needs two equal, nonempty batches");
  }
  const Tensor sim = ops::scale(ops::matmul(ops::normalize_rows(sv), ops::transpose(ops::normalize_rows(rv))),
                                1.0 / tau);
  return ops::mean(ops::sub(ops::row_logsumexp(sim), ops::diagonal(sim)));
}

Tensor fuse_multiview(const Tensor& sv, const Tensor& rv) { return ops::add(rv, sv); }

Tensor concrete_contrastive(const Tensor& fused, double tau) {
  require_tau(tau);
  if (fused.rows() < 1) throw DimensionError("concrete contrastive needs a nonempty batch");
  const Tensor sim = ops::scale(ops::self_cosine(fused), 1.0 / tau);
  return ops::mean(ops::add_scalar(ops::row_logsumexp(sim), -1.0 / tau));
}

Tensor combine_contrastive(const Tensor& dc_users, const Tensor& dc_bundles, const Tensor& cc_users,
                           const Tensor& cc_bundles, double gamma) {
  require_unit(gamma, "gamma");
  const Tensor dc = ops::scale(ops::add(dc_users, dc_bundles), 0.5);
  const Tensor cc = ops::scale(ops::add(cc_users, cc_bundles), 0.5);
  return ops::add(ops::scale(dc, gamma), ops::scale(cc, 1.0 - gamma));
}

Tensor final_repr(const Tensor& sv, const Tensor& rv, double mu) {
  require_unit(mu, "mu");
  return ops::concat_cols(ops::scale(sv, mu), rv);
}

Tensor score(const Tensor& users, const Tensor& bundles) { return ops::row_dot(users, bundles); }

Tensor bpr_loss(const Tensor& pos, const Tensor& neg) {
  if (pos.rows() < 1) throw DimensionError("BPR loss needs at least one triple");
  return ops::mean(ops::softplus(ops::sub(neg, pos)));
}

Tensor total_loss(const Tensor& bpr, const Tensor& cl, const Tensor& squared_norm, double lambda1,
                  double lambda2) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("loss weights must be non-negative");
  return ops::add(ops::add(bpr, ops::scale(cl, lambda1)), ops::scale(squared_norm, lambda2));
}

}  // namespace bunca
