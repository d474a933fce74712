#pragma once

#include <span>
#include <string>
#include <vector>

#include "bunca/dataset.hpp"
#include "bunca/model.hpp"

namespace bunca {

// Bundles in descending score order, ties by ascending bundle id.
struct RankingResult {
  Index user = 0;
  std::vector<Index> bundles;
  std::vector<double> scores;
};

struct MetricsReport {
  std::vector<Index> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  Index users_evaluated = 0;
};

// Ranks one row of scores, dropping bundles stored in any of the masks' row
// for this user. limit > 0 keeps only the top `limit` entries.
RankingResult rank_scores(std::span<const double> scores, Index user,
                          std::span<const SparseBinaryMatrix* const> masks, Index limit = 0);

// Runs the model forward and ranks every bundle for one user.
RankingResult rank_bundles(const Model& model, const ModelGraphs& graphs, Index user,
                           std::span<const SparseBinaryMatrix* const> masks);

// |top-K intersect test| / |test|.
double recall_at_k(const RankingResult& ranking, std::span<const Index> test, Index k);
// Binary-relevance DCG over the top K divided by the ideal DCG over
// min(|test|, K) positions.
double ndcg_at_k(const RankingResult& ranking, std::span<const Index> test, Index k);

// Metrics averaged over users with at least one held-out bundle.
MetricsReport evaluate_scores(const Matrix& scores, const SparseBinaryMatrix& held_out,
                              std::span<const SparseBinaryMatrix* const> masks, std::span<const Index> ks);

// Test-split evaluation masking train and, if mask_tune, tune interactions.
MetricsReport evaluate_all(const Model& model, const ModelGraphs& graphs, const Dataset& ds,
                           std::span<const Index> ks, bool mask_tune = true);

// {"K": [...], "recall": [...], "ndcg": [...], "users_evaluated": n}
std::string to_json(const MetricsReport& report);

}  // namespace bunca
