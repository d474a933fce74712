#include "bunca/model.hpp"

#include "bunca/cohesive.hpp"
#include "bunca/error.hpp"
#include "bunca/optim.hpp"

namespace bunca {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 1) throw ConfigError("embedding dimension must be positive");
  if (cohesive_layers < 0 || cohesive_layers > 8) throw ConfigError("H must be in [0, 8]");
  if (subview_layers < 0 || subview_layers > 8) throw ConfigError("H_sub must be in [0, 8]");
  if (prospects < 1) throw ConfigError("L must be at least 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
  causation.validate();
  objective.validate();
}

ModelGraphs ModelGraphs::build(const SparseBinaryMatrix& user_bundle, const SparseBinaryMatrix& user_item,
                               const SparseBinaryMatrix& bundle_item, std::int64_t theta_up,
                               std::int64_t theta_bc) {
  if (user_item.rows() != user_bundle.rows() || bundle_item.rows() != user_bundle.cols() ||
      bundle_item.cols() != user_item.cols()) {
    throw DimensionError("interaction matrices disagree on entity counts");
  }
  ModelGraphs g;
  g.num_users = user_bundle.rows();
  g.num_bundles = user_bundle.cols();
  g.num_items = user_item.cols();
  g.unified = build_unified_graph(user_bundle, binarize(cooccurrence(user_bundle, CooccurrenceSide::kRows)),
                                  binarize(cooccurrence(user_bundle, CooccurrenceSide::kCols)));
  g.user_item = build_bipartite_adjacency(user_item);
  g.bundle_item = build_bipartite_adjacency(bundle_item);
  g.up_mask = binarize(cooccurrence(user_item, CooccurrenceSide::kCols), theta_up);
  g.bc_mask = binarize(cooccurrence(bundle_item, CooccurrenceSide::kCols), theta_bc);
  g.bundle_pool = row_mean_operator(bundle_item);
  g.user_pool = row_mean_operator(user_item);
  return g;
}

Model::Model(const ModelConfig& config, Index num_users, Index num_bundles, Index num_items,
             std::uint64_t seed)
    : config_(config) {
  config_.validate();
  if (num_users < 1 || num_bundles < 1 || num_items < 1) throw DimensionError("entity counts must be positive");
  users_ = Tensor::parameter(xavier_init(num_users, config.dim, splitmix(seed ^ 1)));
  bundles_ = Tensor::parameter(xavier_init(num_bundles, config.dim, splitmix(seed ^ 2)));
  items_ = Tensor::parameter(xavier_init(num_items, config.dim, splitmix(seed ^ 3)));
  up_net_ = MpcNet::xavier(config.dim, config.prospects, splitmix(seed ^ 4));
  bc_net_ = MpcNet::xavier(config.dim, config.prospects, splitmix(seed ^ 5));
  params_.add("users", users_);
  params_.add("bundles", bundles_);
  params_.add("items", items_);
  up_net_.register_into(params_, "up");
  bc_net_.register_into(params_, "bc");
}

ForwardState forward(const Model& model, const ModelGraphs& graphs) {
  const ModelConfig& cfg = model.config();
  if (model.users().rows() != graphs.num_users || model.bundles().rows() != graphs.num_bundles ||
      model.items().rows() != graphs.num_items) {
    throw DimensionError("model entity counts differ from the dataset graphs");
  }
  ForwardState s;
  const auto layers = propagate_unified(model.users(), model.bundles(), graphs.unified, cfg.cohesive_layers);
  std::tie(s.sv_users, s.sv_bundles) = aggregate_layers(layers, graphs.num_users);

  s.up_causation = compute_causation(model.items(), model.up_net(), graphs.up_mask, cfg.causation);
  s.bc_causation = compute_causation(model.items(), model.bc_net(), graphs.bc_mask, cfg.causation);
  s.up_items_enhanced = enhance_items(model.items(), s.up_causation, model.up_net(), cfg.causation.alpha);
  s.bc_items_enhanced = enhance_items(model.items(), s.bc_causation, model.bc_net(), cfg.causation.alpha);
  s.up = run_subview_up(model.users(), s.up_items_enhanced, graphs.user_item, graphs.bundle_pool,
                        cfg.subview_layers);
  s.bc = run_subview_bc(model.bundles(), s.bc_items_enhanced, graphs.bundle_item, graphs.user_pool,
                        cfg.subview_layers);
  std::tie(s.rv_users, s.rv_bundles) = fuse_coherent(s.up, s.bc, cfg.beta);

  s.final_users = final_repr(s.sv_users, s.rv_users, cfg.objective.mu);
  s.final_bundles = final_repr(s.sv_bundles, s.rv_bundles, cfg.objective.mu);
  return s;
}

Matrix score_matrix(const ForwardState& state) {
  return state.final_users.value() * state.final_bundles.value().transpose();
}

}  // namespace bunca
