#pragma once

#include <cstdint>

#include "bunca/coherent.hpp"
#include "bunca/objectives.hpp"
#include "bunca/params.hpp"
#include "bunca/sparse.hpp"

namespace bunca {

struct ModelConfig {
  Index dim = 64;
  int cohesive_layers = 2;
  int subview_layers = 1;
  int prospects = 5;
  double beta = 0.8;  // BC vs UP fusion weight
  CausationConfig causation;
  ObjectiveConfig objective;
  // L2 over batch rows of user/bundle embeddings (plus all item and network
  // parameters) instead of every parameter.
  bool regularize_batch_only = false;

  void validate() const;
};

// Every structure the forward pass reads. Immutable after build; ops keep
// pointers into it, so it must outlive any tensor graph built from it.
struct ModelGraphs {
  Index num_users = 0;
  Index num_bundles = 0;
  Index num_items = 0;
  UnifiedGraph unified;
  NormalizedAdjacency user_item;    // users then items
  NormalizedAdjacency bundle_item;  // bundles then items
  SparseBinaryMatrix up_mask;       // binarized Y^T Y
  SparseBinaryMatrix bc_mask;       // binarized Z^T Z
  WeightedCsr bundle_pool;          // mean over a bundle's items
  WeightedCsr user_pool;            // mean over a user's items

  static ModelGraphs build(const SparseBinaryMatrix& user_bundle, const SparseBinaryMatrix& user_item,
                           const SparseBinaryMatrix& bundle_item, std::int64_t theta_up = 1,
                           std::int64_t theta_bc = 1);
};

class Model {
 public:
  Model(const ModelConfig& config, Index num_users, Index num_bundles, Index num_items, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParameterSet& parameters() const { return params_; }

  const Tensor& users() const { return users_; }
  const Tensor& bundles() const { return bundles_; }
  const Tensor& items() const { return items_; }
  const MpcNet& up_net() const { return up_net_; }
  const MpcNet& bc_net() const { return bc_net_; }

 private:
  ModelConfig config_;
  Tensor users_;
  Tensor bundles_;
  Tensor items_;
  MpcNet up_net_;
  MpcNet bc_net_;
  ParameterSet params_;
};

// All intermediate representations of one forward pass over every entity.
struct ForwardState {
  Tensor sv_users;
  Tensor sv_bundles;
  CausationMatrices up_causation;
  CausationMatrices bc_causation;
  Tensor up_items_enhanced;
  Tensor bc_items_enhanced;
  SubViewOutput up;
  SubViewOutput bc;
  Tensor rv_users;
  Tensor rv_bundles;
  Tensor final_users;    // [mu sv | rv], |U| x 2d
  Tensor final_bundles;  // |B| x 2d
};

ForwardState forward(const Model& model, const ModelGraphs& graphs);

// Full |U| x |B| score matrix from a forward state.
Matrix score_matrix(const ForwardState& state);

}  // namespace bunca
