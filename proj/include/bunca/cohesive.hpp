#pragma once

#include <utility>
#include <vector>

#include "bunca/sparse.hpp"
#include "bunca/tensor.hpp"

namespace bunca {

inline constexpr int kMaxPropagationLayers = 8;

// LightGCN propagation: layer 0 is the input, layer h = adj * layer h-1.
// No self term and no nonlinearity.
std::vector<Tensor> propagate_layers(const NormalizedAdjacency& adj, const Tensor& initial, int layers);

// Elementwise sum over every layer, including layer 0.
Tensor sum_layers(const std::vector<Tensor>& layers);

// Stacks [users; bundles] in unified node order and propagates.
std::vector<Tensor> propagate_unified(const Tensor& users, const Tensor& bundles,
                                      const UnifiedGraph& graph, int layers);

// Layer sum split back into (user block, bundle block).
std::pair<Tensor, Tensor> aggregate_layers(const std::vector<Tensor>& layers, Index num_users);

}  // namespace bunca
