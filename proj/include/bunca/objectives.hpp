#pragma once

#include <vector>

#include "bunca/tensor.hpp"

namespace bunca {

struct ObjectiveConfig {
  double tau = 0.25;      // contrastive temperature
  double gamma = 0.5;     // discrete vs concrete contrastive weight
  double mu = 1.0;        // scale of the cohesive block in the final representation
  double lambda1 = 0.1;   // contrastive loss weight
  double lambda2 = 1e-4;  // L2 weight

  void validate() const;
};

// (user, positive bundle, negative bundle) triples.
struct TripleBatch {
  std::vector<Index> users;
  std::vector<Index> positives;
  std::vector<Index> negatives;

  std::size_t size() const { return users.size(); }
};

// Cross-view InfoNCE with in-batch negatives: mean_k of
// -log(exp(cos(sv_k, rv_k)/tau) / sum_k' exp(cos(sv_k, rv_k')/tau)).
Tensor discrete_contrastive(const Tensor& sv, const Tensor& rv, double tau);

// t^C = rv + sv.
Tensor fuse_multiview(const Tensor& sv, const Tensor& rv);

// Self-discrimination: mean_k of -log(exp(1/tau) / sum_k' exp(cos(c_k, c_k')/tau)).
Tensor concrete_contrastive(const Tensor& fused, double tau);

Tensor combine_contrastive(const Tensor& dc_users, const Tensor& dc_bundles, const Tensor& cc_users,
                           const Tensor& cc_bundles, double gamma);

// [mu * sv | rv].
Tensor final_repr(const Tensor& sv, const Tensor& rv, double mu);

// Row inner products of matching rows.
Tensor score(const Tensor& users, const Tensor& bundles);

// Mean over triples of -ln sigmoid(pos - neg), computed as softplus(neg - pos).
Tensor bpr_loss(const Tensor& pos, const Tensor& neg);

// bpr + lambda1 * cl + lambda2 * squared_norm.
Tensor total_loss(const Tensor& bpr, const Tensor& cl, const Tensor& squared_norm, double lambda1,
                  double lambda2);

}  // namespace bunca
