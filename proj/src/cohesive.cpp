#include "bunca/cohesive.hpp"

#include "bunca/error.hpp"

namespace bunca {

std::vector<Tensor> propagate_layers(const NormalizedAdjacency& adj, const Tensor& initial, int layers) {
  if (layers < 0 || layers > kMaxPropagationLayers) {
    throw ConfigError("propagation depth must be in [0, " + std::to_string(kMaxPropagationLayers) + "]");
  }
  if (initial.rows() != adj.num_nodes()) {
    throw DimensionError("propagation: " + std::to_string(initial.rows()) + " feature rows for " +
                         std::to_string(adj.num_nodes()) + " nodes");
  }
  std::vector<Tensor> out{initial};
  for (int h = 0; h < layers; ++h) out.push_back(ops::spmm(adj, out.back()));
  return out;
}

Tensor sum_layers(const std::vector<Tensor>& layers) {
  if (layers.empty()) throw DimensionError("sum_layers on empty layer list");
  Tensor acc = layers.front();
  for (std::size_t h = 1; h < layers.size(); ++h) acc = ops::add(acc, layers[h]);
  return acc;
}

std::vector<Tensor> propagate_unified(const Tensor& users, const Tensor& bundles,
                                      const UnifiedGraph& graph, int layers) {
  if (users.rows() != graph.num_users || bundles.rows() != graph.num_bundles) {
    throw DimensionError("unified propagation: embeddings " + std::to_string(users.rows()) + "/" +
                         std::to_string(bundles.rows()) + " rows for " + std::to_string(graph.num_users) +
                         " users and " + std::to_string(graph.num_bundles) + " bundles");
  }
  return propagate_layers(graph.adjacency, ops::vstack(users, bundles), layers);
}

std::pair<Tensor, Tensor> aggregate_layers(const std::vector<Tensor>& layers, Index num_users) {
  const Tensor total = sum_layers(layers);
  return {ops::row_slice(total, 0, num_users), ops::row_slice(total, num_users, total.rows() - num_users)};
}

}  // namespace bunca
