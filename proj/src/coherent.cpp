#include "bunca/coherent.hpp"

#include "bunca/cohesive.hpp"
#include "bunca/error.hpp"
#include "bunca/optim.hpp"

namespace bunca {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
}

// Rows of items transformed by psi, i.e. (psi * t_i)^T for every i.
Tensor transform_rows(const Tensor& items, const Tensor& psi) {
  return ops::matmul(items, ops::transpose(psi));
}

}  // namespace

MpcNet MpcNet::xavier(Index dim, int num_prospects, std::uint64_t seed) {
  if (num_prospects < 1) throw ConfigError("at least one prospect is required");
  MpcNet net;
  std::uint64_t s = seed;
  for (int l = 0; l < num_prospects; ++l) {
    Prospect p{Tensor::parameter(xavier_init(dim, 1, s + 1)),
               Tensor::parameter(xavier_init(dim, dim, s + 2)),
               Tensor::parameter(xavier_init(dim, dim, s + 3))};
    net.prospects.push_back(std::move(p));
    s += 3;
  }
  net.bias = Tensor::parameter(xavier_init(1, dim, s + 1));
  return net;
}

void MpcNet::register_into(ParameterSet& params, const std::string& prefix) const {
  for (std::size_t l = 0; l < prospects.size(); ++l) {
    const auto tag = std::to_string(l);
    params.add(prefix + ".p" + tag, prospects[l].vector);
    params.add(prefix + ".psi_src" + tag, prospects[l].psi_src);
    params.add(prefix + ".psi_dst" + tag, prospects[l].psi_dst);
  }
  params.add(prefix + ".phi", bias);
}

void CausationConfig::validate() const {
  require_unit_interval(alpha, "alpha");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(slope >= 0.0 && slope < 1.0)) throw ConfigError("leaky slope must be in [0, 1)");
}

std::vector<Tensor> prospect_scores(const Tensor& items, const MpcNet& net,
                                    const SparseBinaryMatrix& mask, double slope) {
  if (mask.rows() != mask.cols() || mask.rows() != items.rows()) {
    throw DimensionError("causation mask does not match " + std::to_string(items.rows()) + " items");
  }
  if (items.cols() != net.dim()) throw DimensionError("item embedding width differs from network width");
  const std::vector<Index> dst = mask.entry_rows();
  const std::vector<Index>& src = mask.indices();
  std::vector<Tensor> scores;
  scores.reserve(net.prospects.size());
  for (const auto& p : net.prospects) {
    const Tensor from = ops::gather_rows(transform_rows(items, p.psi_src), src);
    const Tensor to = ops::gather_rows(transform_rows(items, p.psi_dst), dst);
    const Tensor hidden = ops::leaky_relu(ops::add_row(ops::add(from, to), net.bias), slope);
    scores.push_back(ops::matmul(hidden, p.vector));
  }
  return scores;
}

Tensor causation_matrix(const Tensor& scores, const SparseBinaryMatrix& mask, double epsilon) {
  return ops::edge_softmax(mask, scores, epsilon);
}

CausationMatrices compute_causation(const Tensor& items, const MpcNet& net,
                                    const SparseBinaryMatrix& mask, const CausationConfig& config) {
  CausationMatrices out;
  out.support = &mask;
  for (const auto& s : prospect_scores(items, net, mask, config.slope)) {
    out.weights.push_back(causation_matrix(s, mask, config.epsilon));
  }
  return out;
}

Tensor enhance_items(const Tensor& items, const CausationMatrices& causation, const MpcNet& net,
                     double alpha) {
  require_unit_interval(alpha, "alpha");
  if (causation.support == nullptr || causation.weights.size() != net.prospects.size()) {
    throw DimensionError("causation matrices do not match the prospect count");
  }
  // alpha = 0 must be the exact identity; skip the aggregation altogether.
  if (alpha == 0.0) return items;
  Tensor acc;
  for (std::size_t l = 0; l < net.prospects.size(); ++l) {
    const Tensor t = ops::edge_aggregate(*causation.support, causation.weights[l],
                                         transform_rows(items, net.prospects[l].psi_src));
    acc = l == 0 ? t : ops::add(acc, t);
  }
  const double per_prospect = alpha / static_cast<double>(net.prospects.size());
  if (alpha == 1.0) return ops::scale(acc, per_prospect);
  return ops::add(ops::scale(acc, per_prospect), ops::scale(items, 1.0 - alpha));
}

SubViewOutput run_subview_up(const Tensor& users, const Tensor& enhanced_items,
                             const NormalizedAdjacency& user_item, const WeightedCsr& bundle_pool,
                             int layers) {
  const Index nu = users.rows();
  if (nu + enhanced_items.rows() != user_item.num_nodes() || bundle_pool.cols() != enhanced_items.rows()) {
    throw DimensionError("user-preference sub-view: entity counts disagree with graphs");
  }
  const Tensor total = sum_layers(propagate_layers(user_item, ops::vstack(users, enhanced_items), layers));
  SubViewOutput out;
  out.users = ops::row_slice(total, 0, nu);
  out.items = ops::row_slice(total, nu, enhanced_items.rows());
  out.bundles = ops::mean_pool(bundle_pool, out.items);
  return out;
}

SubViewOutput run_subview_bc(const Tensor& bundles, const Tensor& enhanced_items,
                             const NormalizedAdjacency& bundle_item, const WeightedCsr& user_pool,
                             int layers) {
  const Index nb = bundles.rows();
  if (nb + enhanced_items.rows() != bundle_item.num_nodes() || user_pool.cols() != enhanced_items.rows()) {
    throw DimensionError("bundle-construction sub-view: entity counts disagree with graphs");
  }
  const Tensor total = sum_layers(propagate_layers(bundle_item, ops::vstack(bundles, enhanced_items), layers));
  SubViewOutput out;
  out.bundles = ops::row_slice(total, 0, nb);
  out.items = ops::row_slice(total, nb, enhanced_items.rows());
  out.users = ops::mean_pool(user_pool, out.items);
  return out;
}

std::pair<Tensor, Tensor> fuse_coherent(const SubViewOutput& up, const SubViewOutput& bc, double beta) {
  require_unit_interval(beta, "beta");
  auto mix = [beta](const Tensor& b, const Tensor& u) {
    return ops::add(ops::scale(b, beta), ops::scale(u, 1.0 - beta));
  };
  return {mix(bc.users, up.users), mix(bc.bundles, up.bundles)};
}

}  // namespace bunca
