#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bunca/params.hpp"
#include "bunca/sparse.hpp"
#include "bunca/tensor.hpp"

namespace bunca {

// One attention head of the causation network.
struct Prospect {
  Tensor vector;   // d x 1
  Tensor psi_src;  // d x d, shared by scoring and neighbor aggregation
  Tensor psi_dst;  // d x d
};

// Multi-prospect causation network parameters for one sub-view.
struct MpcNet {
  std::vector<Prospect> prospects;
  Tensor bias;  // 1 x d

  static MpcNet xavier(Index dim, int num_prospects, std::uint64_t seed);
  Index dim() const { return bias.cols(); }
  // Registers <prefix>.p<l>, <prefix>.psi_src<l>, <prefix>.psi_dst<l>, <prefix>.phi.
  void register_into(ParameterSet& params, const std::string& prefix) const;
};

struct CausationConfig {
  double alpha = 0.5;    // residual mix of aggregated neighbors
  double epsilon = 1e-8; // row-sum clamp
  double slope = 0.2;    // leaky activation slope

  void validate() const;
};

// Per-prospect per-entry weights on the co-occurrence support. Entry (i, j)
// is how much item i is influenced by item j.
struct CausationMatrices {
  const SparseBinaryMatrix* support = nullptr;
  std::vector<Tensor> weights;  // each nnz x 1, storage order of *support
};

// r_{j->i} = p . act(Psi_src t_j + Psi_dst t_i + phi) for every stored (i, j).
std::vector<Tensor> prospect_scores(const Tensor& items, const MpcNet& net,
                                    const SparseBinaryMatrix& mask, double slope);

// Masked row softmax of one prospect's scores with denominator clamp.
Tensor causation_matrix(const Tensor& scores, const SparseBinaryMatrix& mask, double epsilon);

CausationMatrices compute_causation(const Tensor& items, const MpcNet& net,
                                    const SparseBinaryMatrix& mask, const CausationConfig& config);

// t_i^l = sum_j A^l(i, j) Psi_src^l t_j; result = alpha * mean_l t_i^l + (1 - alpha) t_i.
Tensor enhance_items(const Tensor& items, const CausationMatrices& causation, const MpcNet& net,
                     double alpha);

struct SubViewOutput {
  Tensor users;
  Tensor bundles;
  Tensor items;
};

// User-preference branch: propagate [users; enhanced items] over the
// user-item graph, then mean-pool item rows into bundles.
SubViewOutput run_subview_up(const Tensor& users, const Tensor& enhanced_items,
                             const NormalizedAdjacency& user_item, const WeightedCsr& bundle_pool,
                             int layers);

// Bundle-construction branch: propagate [bundles; enhanced items] over the
// bundle-item graph, then mean-pool item rows into users.
SubViewOutput run_subview_bc(const Tensor& bundles, const Tensor& enhanced_items,
                             const NormalizedAdjacency& bundle_item, const WeightedCsr& user_pool,
                             int layers);

// (users, bundles) = beta * BC + (1 - beta) * UP.
std::pair<Tensor, Tensor> fuse_coherent(const SubViewOutput& up, const SubViewOutput& bc, double beta);

}  // namespace bunca
