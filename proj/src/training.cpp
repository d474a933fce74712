#include "bunca/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "bunca/checkpoint.hpp"
#include "bunca/error.hpp"
#include "bunca/optim.hpp"

namespace bunca {

namespace {

Index draw_negative(const SparseBinaryMatrix& train, Index user, Rng& rng) {
  if (train.row_size(user) >= train.cols()) {
    throw DataError("user " + std::to_string(user) + " interacted with every bundle; no negative exists");
  }
  const auto n = static_cast<std::uint64_t>(train.cols());
  for (;;) {
    const auto b = static_cast<Index>(rng.uniform_index(n));
    if (!train.contains(user, b)) return b;
  }
}

std::vector<Index> unique_sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Tensor batch_regularizer(const Model& model, std::span<const Index> users, std::span<const Index> bundles) {
  Tensor reg = ops::add(ops::squared_norm(ops::gather_rows(model.users(), users)),
                        ops::squared_norm(ops::gather_rows(model.bundles(), bundles)));
  for (const auto& e : model.parameters()) {
    if (e.tensor.same_node(model.users()) || e.tensor.same_node(model.bundles())) continue;
    reg = ops::add(reg, ops::squared_norm(e.tensor));
  }
  return reg;
}

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["K"] = r.ks;
  j["recall"] = r.recall;
  j["ndcg"] = r.ndcg;
  j["users_evaluated"] = r.users_evaluated;
  return j;
}

double recall_for(const MetricsReport& r, Index k) {
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    if (r.ks[i] == k) return r.recall[i];
  }
  throw ConfigError("selection K missing from validation report");
}

}  // namespace

void TrainConfig::validate() const {
  model_config().validate();
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (patience < 0) throw ConfigError("patience must be non-negative");
  if (negatives < 1) throw ConfigError("negatives must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (theta_up < 1 || theta_bc < 1) throw ConfigError("co-occurrence thresholds must be at least 1");
  if (ks.empty()) throw ConfigError("ks must list at least one K");
  for (Index k : ks) {
    if (k < 1) throw ConfigError("every K in ks must be positive");
  }
  if (select_k < 1) throw ConfigError("select_k must be positive");
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.dim = d;
  m.cohesive_layers = H;
  m.subview_layers = H_sub;
  m.prospects = L;
  m.beta = beta;
  m.causation.alpha = alpha;
  m.objective.gamma = gamma;
  m.objective.mu = mu;
  m.objective.tau = tau;
  m.objective.lambda1 = lambda1;
  m.objective.lambda2 = lambda2;
  m.regularize_batch_only = regularize_batch_only;
  return m;
}

TripleBatch sample_triples(const SparseBinaryMatrix& train, Index batch_size, Rng& rng) {
  if (train.nnz() == 0) throw DataError("training interactions are empty");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  const auto rows = train.entry_rows();
  TripleBatch batch;
  for (Index i = 0; i < batch_size; ++i) {
    const auto e = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(train.nnz())));
    const Index u = rows[e];
    batch.users.push_back(u);
    batch.positives.push_back(train.indices()[e]);
    batch.negatives.push_back(draw_negative(train, u, rng));
  }
  return batch;
}

std::vector<TripleBatch> epoch_batches(const SparseBinaryMatrix& train, Index batch_size, int negatives,
                                       Rng& rng) {
  if (train.nnz() == 0) throw DataError("training interactions are empty");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (negatives < 1) throw ConfigError("negatives must be at least 1");
  const auto rows = train.entry_rows();
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(train.nnz() * negatives));
  for (int k = 0; k < negatives; ++k) {
    for (Index e = 0; e < train.nnz(); ++e) order.push_back(e);
  }
  rng.shuffle(std::span<Index>(order));
  std::vector<TripleBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    TripleBatch b;
    for (std::size_t i = start; i < stop; ++i) {
      const auto e = static_cast<std::size_t>(order[i]);
      b.users.push_back(rows[e]);
      b.positives.push_back(train.indices()[e]);
      b.negatives.push_back(draw_negative(train, rows[e], rng));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

BatchLoss forward_batch(const Model& model, const ModelGraphs& graphs, const TripleBatch& batch) {
  if (batch.size() == 0 || batch.positives.size() != batch.size() || batch.negatives.size() != batch.size()) {
    throw DimensionError("triple batch must be nonempty with matching columns");
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.users[i] < 0 || batch.users[i] >= graphs.num_users || batch.positives[i] < 0 ||
        batch.positives[i] >= graphs.num_bundles || batch.negatives[i] < 0 ||
        batch.negatives[i] >= graphs.num_bundles) {
      throw DimensionError("triple batch references an id outside the model");
    }
  }
  const ObjectiveConfig& obj = model.config().objective;
  BatchLoss out;
  out.state = forward(model, graphs);
  const ForwardState& s = out.state;

  const Tensor u = ops::gather_rows(s.final_users, batch.users);
  out.pos = score(u, ops::gather_rows(s.final_bundles, batch.positives));
  out.neg = score(u, ops::gather_rows(s.final_bundles, batch.negatives));
  out.bpr = bpr_loss(out.pos, out.neg);

  const auto users = unique_sorted(batch.users);
  std::vector<Index> all_bundles = batch.positives;
  all_bundles.insert(all_bundles.end(), batch.negatives.begin(), batch.negatives.end());
  const auto bundles = unique_sorted(std::move(all_bundles));

  const Tensor sv_u = ops::gather_rows(s.sv_users, users);
  const Tensor rv_u = ops::gather_rows(s.rv_users, users);
  const Tensor sv_b = ops::gather_rows(s.sv_bundles, bundles);
  const Tensor rv_b = ops::gather_rows(s.rv_bundles, bundles);
  out.cl = combine_contrastive(discrete_contrastive(sv_u, rv_u, obj.tau), discrete_contrastive(sv_b, rv_b, obj.tau),
                               concrete_contrastive(fuse_multiview(sv_u, rv_u), obj.tau),
                               concrete_contrastive(fuse_multiview(sv_b, rv_b), obj.tau), obj.gamma);

  out.reg = model.config().regularize_batch_only ? batch_regularizer(model, users, bundles)
                                                 : model.parameters().squared_norm();
  out.total = total_loss(out.bpr, out.cl, out.reg, obj.lambda1, obj.lambda2);
  return out;
}

FitResult fit(const TrainConfig& config, const Dataset& dataset, std::ostream* metrics) {
  config.validate();
  const ModelGraphs graphs = build_graphs(dataset, config.theta_up, config.theta_bc);
  FitResult result{Model(config.model_config(), dataset.num_users, dataset.num_bundles, dataset.num_items,
                         config.seed),
                   {}};
  Model& model = result.model;
  const ParameterSet& params = model.parameters();
  AdamState adam = AdamState::for_params(params);
  AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  Rng rng(config.seed ^ 0x7a11eb5e5eedULL);

  std::vector<Index> val_ks = config.ks;
  if (std::find(val_ks.begin(), val_ks.end(), config.select_k) == val_ks.end()) val_ks.push_back(config.select_k);
  const bool can_validate = dataset.tune.nnz() > 0;
  const std::vector<const SparseBinaryMatrix*> val_masks{&dataset.train};

  std::vector<Matrix> best;
  double best_score = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      const auto batches = epoch_batches(dataset.train, config.batch_size, config.negatives, rng);
      double loss = 0.0, bpr = 0.0, cl = 0.0;
      for (const auto& batch : batches) {
        const BatchLoss bl = forward_batch(model, graphs, batch);
        const double total = bl.total.item();
        if (!std::isfinite(total)) throw NumericalError("non-finite loss");
        compute_gradients(bl.total, params);
        adam_step(params, adam, adam_cfg);
        loss += total;
        bpr += bl.bpr.item();
        cl += bl.cl.item();
      }
      const auto n = static_cast<double>(batches.size());
      rec.loss = loss / n;
      rec.bpr = bpr / n;
      rec.cl = cl / n;
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    bool improved = false;
    if (can_validate && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      const ForwardState s = forward(model, graphs);
      rec.validation = evaluate_scores(score_matrix(s), dataset.tune, val_masks, val_ks);
      const double score = recall_for(*rec.validation, config.select_k);
      if (score > best_score) {
        best_score = score;
        improved = true;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else if (!can_validate) {
      improved = true;
    }
    if (improved) {
      result.history.best_epoch = epoch;
      best.clear();
      for (const auto& e : params) best.push_back(e.tensor.value());
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (metrics) {
      nlohmann::ordered_json j;
      j["epoch"] = rec.epoch;
      j["loss"] = rec.loss;
      j["bpr"] = rec.bpr;
      j["cl"] = rec.cl;
      if (rec.validation) j["validation"] = report_json(*rec.validation);
      *metrics << j.dump() << '\n';
    }
    result.history.epochs.push_back(std::move(rec));

    if (config.patience > 0 && since_best >= config.patience) {
      result.history.stopped_early = true;
      break;
    }
  }

  std::size_t i = 0;
  for (const auto& e : params) {
    Tensor t = e.tensor;
    t.mutable_value() = best[i++];
  }
  return result;
}

GradcheckReport toy_gradcheck(const GradcheckOptions& options, std::uint64_t seed) {
  const Dataset ds = toy_dataset();
  const ModelGraphs graphs = build_graphs(ds);
  TrainConfig cfg;
  cfg.d = 4;
  cfg.H = 2;
  cfg.H_sub = 1;
  cfg.L = 2;
  const Model model(cfg.model_config(), ds.num_users, ds.num_bundles, ds.num_items, seed);
  Rng rng(seed);
  const TripleBatch batch = sample_triples(ds.train, 6, rng);
  return gradcheck([&] { return forward_batch(model, graphs, batch).total; }, model.parameters(), options);
}

}  // namespace bunca
