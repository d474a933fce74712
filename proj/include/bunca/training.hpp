#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bunca/dataset.hpp"
#include "bunca/evaluation.hpp"
#include "bunca/gradcheck.hpp"
#include "bunca/model.hpp"
#include "bunca/random.hpp"

namespace bunca {

struct TrainConfig {
  Index d = 64;
  int H = 2;
  int H_sub = 1;
  int L = 5;
  double alpha = 0.5;
  double beta = 0.8;
  double gamma = 0.5;
  double mu = 1.0;
  double tau = 0.25;
  double lambda1 = 0.1;
  double lambda2 = 1e-4;
  double lr = 1e-3;
  Index batch_size = 128;
  int epochs = 100;
  int eval_every = 1;
  int patience = 10;  // validations without improvement; 0 disables early stop
  std::uint64_t seed = 42;
  std::int64_t theta_up = 1;
  std::int64_t theta_bc = 1;
  std::vector<Index> ks{10, 20};
  int negatives = 1;        // negatives per positive, as duplicated triples
  Index select_k = 20;      // validation Recall@K used for model selection
  bool regularize_batch_only = false;

  void validate() const;
  ModelConfig model_config() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double bpr = 0.0;
  double cl = 0.0;
  double wall_seconds = 0.0;
  std::optional<MetricsReport> validation;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

// batch_size positives drawn uniformly (with replacement) from the stored
// interactions, each with one rejection-sampled negative.
TripleBatch sample_triples(const SparseBinaryMatrix& train, Index batch_size, Rng& rng);

// One pass over all interactions in shuffled order, chunked into batches.
// Each positive appears `negatives` times with independent negatives.
std::vector<TripleBatch> epoch_batches(const SparseBinaryMatrix& train, Index batch_size, int negatives,
                                       Rng& rng);

struct BatchLoss {
  Tensor pos;  // batch x 1
  Tensor neg;  // batch x 1
  Tensor bpr;
  Tensor cl;
  Tensor reg;  // squared norm, unweighted
  Tensor total;
  ForwardState state;
};

// Full forward pass, then BPR over the triples, contrastive losses over the
// batch's unique users and unique bundles (positives and negatives), and L2.
BatchLoss forward_batch(const Model& model, const ModelGraphs& graphs, const TripleBatch& batch);

struct FitResult {
  Model model;
  TrainHistory history;
};

// Adam on total loss. Validation on the tune split (train masked) every
// eval_every epochs; parameters are restored to the best validation epoch.
// Writes one JSON object per epoch to metrics when given. Throws
// NumericalError naming the epoch on divergence.
FitResult fit(const TrainConfig& config, const Dataset& dataset, std::ostream* metrics = nullptr);

// Full-loss gradient check on the built-in toy instance with d=4, H=2,
// H_sub=1, L=2.
GradcheckReport toy_gradcheck(const GradcheckOptions& options = {}, std::uint64_t seed = 1);

}  // namespace bunca
