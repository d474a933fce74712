#include "bunca/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "bunca/error.hpp"
#include "bunca/parallel.hpp"

namespace bunca {

namespace {

void require_k(Index k) {
  if (k <= 0) throw ConfigError("K must be positive");
}

bool in_set(std::span<const Index> sorted, Index v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

}  // namespace

RankingResult rank_scores(std::span<const double> scores, Index user,
                          std::span<const SparseBinaryMatrix* const> masks, Index limit) {
  RankingResult r;
  r.user = user;
  for (Index b = 0; b < static_cast<Index>(scores.size()); ++b) {
    const bool masked = std::any_of(masks.begin(), masks.end(),
                                    [&](const SparseBinaryMatrix* m) { return m->contains(user, b); });
    if (!masked) r.bundles.push_back(b);
  }
  auto before = [&](Index a, Index b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (limit > 0 && limit < static_cast<Index>(r.bundles.size())) {
    std::partial_sort(r.bundles.begin(), r.bundles.begin() + limit, r.bundles.end(), before);
    r.bundles.resize(static_cast<std::size_t>(limit));
  } else {
    std::sort(r.bundles.begin(), r.bundles.end(), before);
  }
  r.scores.reserve(r.bundles.size());
  for (Index b : r.bundles) r.scores.push_back(scores[b]);
  return r;
}

RankingResult rank_bundles(const Model& model, const ModelGraphs& graphs, Index user,
                           std::span<const SparseBinaryMatrix* const> masks) {
  if (user < 0 || user >= graphs.num_users) throw DataError("unknown user id " + std::to_string(user));
  const ForwardState state = forward(model, graphs);
  const Matrix row = state.final_users.value().row(user) * state.final_bundles.value().transpose();
  return rank_scores(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), user, masks);
}

double recall_at_k(const RankingResult& ranking, std::span<const Index> test, Index k) {
  require_k(k);
  if (test.empty()) throw DataError("recall needs a nonempty test set");
  std::vector<Index> sorted(test.begin(), test.end());
  std::sort(sorted.begin(), sorted.end());
  const auto top = std::min<std::size_t>(ranking.bundles.size(), static_cast<std::size_t>(k));
  Index hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += in_set(sorted, ranking.bundles[i]);
  return static_cast<double>(hits) / static_cast<double>(sorted.size());
}

double ndcg_at_k(const RankingResult& ranking, std::span<const Index> test, Index k) {
  require_k(k);
  if (test.empty()) throw DataError("NDCG needs a nonempty test set");
  std::vector<Index> sorted(test.begin(), test.end());
  std::sort(sorted.begin(), sorted.end());
  const auto top = std::min<std::size_t>(ranking.bundles.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t i = 0; i < top; ++i) {
    if (in_set(sorted, ranking.bundles[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const auto ideal = std::min<std::size_t>(sorted.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

MetricsReport evaluate_scores(const Matrix& scores, const SparseBinaryMatrix& held_out,
                              std::span<const SparseBinaryMatrix* const> masks, std::span<const Index> ks) {
  if (scores.rows() != held_out.rows() || scores.cols() != held_out.cols()) {
    throw DimensionError("score matrix does not match the held-out split");
  }
  if (ks.empty()) throw ConfigError("at least one K is required");
  for (Index k : ks) require_k(k);
  const Index max_k = *std::max_element(ks.begin(), ks.end());
  const Index nu = scores.rows();
  const auto nk = ks.size();
  Matrix recall = Matrix::Zero(nu, static_cast<Index>(nk));
  Matrix ndcg = Matrix::Zero(nu, static_cast<Index>(nk));
  parallel_for(nu, [&](Index begin, Index end) {
    for (Index u = begin; u < end; ++u) {
      const auto test = held_out.row(u);
      if (test.empty()) continue;
      const auto ranking = rank_scores(
          std::span<const double>(scores.row(u).data(), static_cast<std::size_t>(scores.cols())), u, masks, max_k);
      for (std::size_t j = 0; j < nk; ++j) {
        recall(u, static_cast<Index>(j)) = recall_at_k(ranking, test, ks[j]);
        ndcg(u, static_cast<Index>(j)) = ndcg_at_k(ranking, test, ks[j]);
      }
    }
  }, 64);
  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.recall.assign(nk, 0.0);
  report.ndcg.assign(nk, 0.0);
  for (Index u = 0; u < nu; ++u) {
    if (held_out.row_size(u) == 0) continue;
    ++report.users_evaluated;
    for (std::size_t j = 0; j < nk; ++j) {
      report.recall[j] += recall(u, static_cast<Index>(j));
      report.ndcg[j] += ndcg(u, static_cast<Index>(j));
    }
  }
  if (report.users_evaluated > 0) {
    for (std::size_t j = 0; j < nk; ++j) {
      report.recall[j] /= static_cast<double>(report.users_evaluated);
      report.ndcg[j] /= static_cast<double>(report.users_evaluated);
    }
  }
  return report;
}

MetricsReport evaluate_all(const Model& model, const ModelGraphs& graphs, const Dataset& ds,
                           std::span<const Index> ks, bool mask_tune) {
  const ForwardState state = forward(model, graphs);
  std::vector<const SparseBinaryMatrix*> masks{&ds.train};
  if (mask_tune) masks.push_back(&ds.tune);
  return evaluate_scores(score_matrix(state), ds.test, masks, ks);
}

std::string to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["K"] = report.ks;
  j["recall"] = report.recall;
  j["ndcg"] = report.ndcg;
  j["users_evaluated"] = report.users_evaluated;
  return j.dump();
}

}  // namespace bunca
