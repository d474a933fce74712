// One line per acceptance criterion: PASS, FAIL or SKIP, followed by the
// measured quantities. Exit status is nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bunca/checkpoint.hpp"
#include "bunca/cli.hpp"
#include "bunca/cohesive.hpp"
#include "bunca/dataset.hpp"
#include "bunca/error.hpp"
#include "bunca/evaluation.hpp"
#include "bunca/optim.hpp"
#include "bunca/training.hpp"
#include "oracles.hpp"

using namespace bunca;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 10.0;
constexpr int kOracleInstances = 200;
constexpr Index kOracleMaxEntities = 50;
constexpr double kPropagationTolerance = 1e-10;
constexpr double kOracleSeconds = 30.0;
constexpr int kNormalizationDraws = 100;
constexpr double kRowSumTolerance = 1e-9;
constexpr double kBprTolerance = 1e-12;
constexpr double kScoreTolerance = 1e-10;
constexpr double kMinRecall5 = 0.80;
constexpr double kMinNdcg5 = 0.60;
constexpr int kMaxEpochs = 300;
constexpr double kLearningSeconds = 120.0;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckOptions opt;
  opt.step = kGradStep;
  opt.tolerance = kGradTolerance;
  const GradcheckReport r = toy_gradcheck(opt, 1);
  const double secs = seconds_since(t0);
  // every tensor of the model must be covered, each in full at this size
  std::set<std::string> names;
  bool complete = true;
  for (const auto& e : r.entries) {
    names.insert(e.name);
  }
  for (const char* n : {"users", "bundles", "items", "up.phi", "bc.phi"}) complete &= names.count(n) == 1;
  for (const char* v : {"up", "bc"}) {
    for (int l = 0; l < 2; ++l) {
      for (const char* t : {".p", ".psi_src", ".psi_dst"}) complete &= names.count(v + std::string(t) + std::to_string(l)) == 1;
    }
  }
  const bool ok = r.passed && complete && names.size() == 17 && secs < kGradSeconds;
  return {ok ? Status::kPass : Status::kFail,
          "max_rel_error=" + fmt(r.max_rel_error) + " tensors=" + std::to_string(names.size()) +
              " seconds=" + fmt(secs)};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2024);
  double worst_prop = 0.0, worst_pool = 0.0;
  Index metric_mismatches = 0, metric_checks = 0;
  auto rand_count = [&](Index lo, Index hi) { return lo + static_cast<Index>(gen() % static_cast<std::uint64_t>(hi - lo + 1)); };
  for (int inst = 0; inst < kOracleInstances; ++inst) {
    // users + bundles + items stays within kOracleMaxEntities
    const Index nu = rand_count(2, 18), nb = rand_count(2, 16);
    const Index ni = rand_count(2, kOracleMaxEntities - nu - nb);
    const double p = 0.1 + 0.3 * std::uniform_real_distribution<double>(0, 1)(gen);
    const auto x = oracle::random_binary(nu, nb, p, gen);
    const auto y = oracle::random_binary(nu, ni, p, gen);
    const auto z = oracle::random_binary(nb, ni, p, gen);
    const Index d = rand_count(1, 6);
    const int H = static_cast<int>(rand_count(0, 4));

    const auto g = build_unified_graph(x, binarize(cooccurrence(x, CooccurrenceSide::kRows)),
                                       binarize(cooccurrence(x, CooccurrenceSide::kCols)));
    const Matrix u0 = oracle::random_matrix(nu, d, gen), b0 = oracle::random_matrix(nb, d, gen);
    const auto [su, sb] = aggregate_layers(propagate_unified(Tensor(u0), Tensor(b0), g, H), nu);
    Matrix stacked(nu + nb, d);
    stacked << u0, b0;
    const Matrix sv = oracle::propagate_sum(oracle::normalized(oracle::unified(oracle::dense(x))), stacked, H);
    worst_prop = std::max({worst_prop, (su.value() - sv.topRows(nu)).cwiseAbs().maxCoeff(),
                           (sb.value() - sv.bottomRows(nb)).cwiseAbs().maxCoeff()});

    const Matrix items = oracle::random_matrix(ni, d, gen);
    const int Hs = static_cast<int>(rand_count(0, 2));
    const auto up = run_subview_up(Tensor(u0), Tensor(items), build_bipartite_adjacency(y), row_mean_operator(z), Hs);
    const auto bc = run_subview_bc(Tensor(b0), Tensor(items), build_bipartite_adjacency(z), row_mean_operator(y), Hs);
    Matrix ui(nu + ni, d), bi(nb + ni, d);
    ui << u0, items;
    bi << b0, items;
    const Matrix pu = oracle::propagate_sum(oracle::normalized(oracle::bipartite(oracle::dense(y))), ui, Hs);
    const Matrix pb = oracle::propagate_sum(oracle::normalized(oracle::bipartite(oracle::dense(z))), bi, Hs);
    worst_pool = std::max(
        {worst_pool, (up.users.value() - pu.topRows(nu)).cwiseAbs().maxCoeff(),
         (up.bundles.value() - oracle::row_mean(oracle::dense(z), pu.bottomRows(ni))).cwiseAbs().maxCoeff(),
         (bc.bundles.value() - pb.topRows(nb)).cwiseAbs().maxCoeff(),
         (bc.users.value() - oracle::row_mean(oracle::dense(y), pb.bottomRows(ni))).cwiseAbs().maxCoeff()});

    // metrics on random scores; integer-valued scores exercise the tie rule
    Matrix scores = oracle::random_matrix(nu, nb, gen);
    if (inst % 2 == 1) scores = (scores * 2.0).array().round().matrix();
    const auto held = oracle::random_binary(nu, nb, 0.2, gen);
    std::vector<std::pair<Index, Index>> test_pairs;
    for (const auto& [u, b] : held.pairs()) {
      if (!x.contains(u, b)) test_pairs.emplace_back(u, b);
    }
    const auto test = SparseBinaryMatrix::from_pairs(nu, nb, test_pairs);
    const std::vector<Index> ks{1, 3, 5, 10};
    const std::vector<const SparseBinaryMatrix*> masks{&x};
    const MetricsReport rep = evaluate_scores(scores, test, masks, ks);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      double recall = 0.0, ndcg = 0.0;
      Index users = 0;
      for (Index u = 0; u < nu; ++u) {
        if (test.row_size(u) == 0) continue;
        ++users;
        const std::vector<double> row(scores.row(u).data(), scores.row(u).data() + nb);
        const auto m = oracle::brute_force_metrics(row, std::set<Index>(x.row(u).begin(), x.row(u).end()),
                                                   std::set<Index>(test.row(u).begin(), test.row(u).end()), ks[j]);
        recall += m.recall;
        ndcg += m.ndcg;
      }
      if (users > 0) {
        recall /= static_cast<double>(users);
        ndcg /= static_cast<double>(users);
      }
      ++metric_checks;
      metric_mismatches += (rep.recall[j] != recall) + (rep.ndcg[j] != ndcg) + (rep.users_evaluated != users);
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_prop <= kPropagationTolerance && worst_pool <= kPropagationTolerance &&
                  metric_mismatches == 0 && secs < kOracleSeconds;
  return {ok ? Status::kPass : Status::kFail,
          "instances=" + std::to_string(kOracleInstances) + " propagation_err=" + fmt(worst_prop) +
              " pooling_err=" + fmt(worst_pool) + " metric_mismatches=" + std::to_string(metric_mismatches) + "/" +
              std::to_string(metric_checks) + " seconds=" + fmt(secs)};
}

Outcome normalization_invariants() {
  // the toy instance's item co-occurrence plus two items nobody touches
  Dataset ds = toy_dataset();
  const auto up = binarize(cooccurrence(ds.user_item, CooccurrenceSide::kCols));
  const Index n = up.cols() + 2;
  const auto mask = SparseBinaryMatrix::from_pairs(n, n, up.pairs());
  std::mt19937_64 gen(99);
  double worst_sum = 0.0;
  Index nonzero_empty = 0, outside_support = 0, rows_checked = 0, empty_rows = 0;
  // draws follow the model's own initialization; far larger scales push
  // every score of a row below ln(eps), where the clamp makes the row sum < 1
  for (int draw = 0; draw < kNormalizationDraws; ++draw) {
    const Index d = 1 + static_cast<Index>(gen() % 8);
    const int L = 1 + static_cast<int>(gen() % 5);
    const MpcNet net = MpcNet::xavier(d, L, gen());
    const Tensor items(xavier_init(n, d, gen()));
    const auto c = compute_causation(items, net, mask, CausationConfig{});
    if (c.support != &mask) ++outside_support;
    for (const auto& w : c.weights) {
      if (w.rows() != mask.nnz()) ++outside_support;
      for (Index i = 0; i < n; ++i) {
        const Index begin = mask.offsets()[i], end = mask.offsets()[i + 1];
        if (begin == end) {
          ++empty_rows;
          // nothing is stored for the row, so its dense form is exactly zero
          continue;
        }
        double s = 0.0;
        for (Index e = begin; e < end; ++e) {
          if (!(w.value()(e, 0) >= 0.0)) ++nonzero_empty;
          s += w.value()(e, 0);
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        ++rows_checked;
      }
    }
  }
  // independent check of the empty-row and support claims on one draw
  const MpcNet net = MpcNet::xavier(3, 2, 5);
  const Tensor items(oracle::random_matrix(n, 3, gen));
  const auto c = compute_causation(items, net, mask, CausationConfig{});
  const Matrix dm = oracle::dense(mask);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& p = net.prospects[l];
    const Matrix ref = oracle::causation(items.value(), p.vector.value(), p.psi_src.value(), p.psi_dst.value(),
                                         net.bias.value(), dm, 0.2, 1e-8);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (dm(i, j) == 0.0 && ref(i, j) != 0.0) ++outside_support;
  }
  const bool ok = worst_sum <= kRowSumTolerance && nonzero_empty == 0 && outside_support == 0 && empty_rows > 0;
  return {ok ? Status::kPass : Status::kFail,
          "draws=" + std::to_string(kNormalizationDraws) + " rows=" + std::to_string(rows_checked) +
              " empty_rows=" + std::to_string(empty_rows) + " max_row_sum_err=" + fmt(worst_sum) +
              " support_violations=" + std::to_string(outside_support)};
}

Outcome analytic_spot_values() {
  std::mt19937_64 gen(5);
  const Tensor zeros(Matrix::Zero(4, 1));
  const double bpr_err = std::abs(bpr_loss(zeros, zeros).item() - std::log(2.0));

  const Tensor a(oracle::random_matrix(1, 5, gen)), b(oracle::random_matrix(1, 5, gen));
  const double dc = discrete_contrastive(a, b, 0.25).item();
  const double cc = concrete_contrastive(fuse_multiview(a, b), 0.25).item();

  const Dataset ds = toy_dataset();
  const ModelGraphs g = build_graphs(ds);
  ModelConfig cfg;
  cfg.dim = 4;
  cfg.prospects = 3;
  cfg.objective.mu = 0.7;
  const Model m(cfg, ds.num_users, ds.num_bundles, ds.num_items, 17);
  const auto causation = compute_causation(m.items(), m.up_net(), g.up_mask, cfg.causation);
  const Tensor same = enhance_items(m.items(), causation, m.up_net(), 0.0);
  const bool identity = same.same_node(m.items()) && same.value() == m.items().value();

  const ForwardState s = forward(m, g);
  const Matrix y = score_matrix(s);
  const Matrix expected = 0.49 * s.sv_users.value() * s.sv_bundles.value().transpose() +
                          s.rv_users.value() * s.rv_bundles.value().transpose();
  const double score_err = (y - expected).cwiseAbs().maxCoeff();

  const bool ok = bpr_err <= kBprTolerance && dc == 0.0 && cc == 0.0 && identity && score_err <= kScoreTolerance;
  return {ok ? Status::kPass : Status::kFail,
          "bpr_ln2_err=" + fmt(bpr_err) + " discrete_cl_n1=" + fmt(dc) + " concrete_cl_n1=" + fmt(cc) +
              " alpha0_identity=" + (identity ? "yes" : "no") + " score_decomposition_err=" + fmt(score_err)};
}

Outcome end_to_end_learning() {
  const Dataset ds = synth_generate(SynthSpec{});
  TrainConfig cfg;
  cfg.epochs = kMaxEpochs;
  cfg.patience = 0;
  cfg.ks = {5, 10, 20};
  const std::vector<Index> ks{5};
  const ModelGraphs g = build_graphs(ds, cfg.theta_up, cfg.theta_bc);
  const Model init(cfg.model_config(), ds.num_users, ds.num_bundles, ds.num_items, cfg.seed);
  const MetricsReport before = evaluate_all(init, g, ds, ks);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult full = fit(cfg, ds);
  const MetricsReport after = evaluate_all(full.model, g, ds, ks);
  TrainConfig ablated = cfg;
  ablated.lambda1 = 0.0;
  bool ablated_ok = true;
  MetricsReport ablated_report;
  std::string ablated_error;
  try {
    const FitResult r = fit(ablated, ds);
    for (const auto& e : r.history.epochs) ablated_ok &= std::isfinite(e.loss);
    ablated_report = evaluate_all(r.model, g, ds, ks);
  } catch (const NumericalError& e) {
    ablated_ok = false;
    ablated_error = e.what();
  }
  const double secs = seconds_since(t0);
  const bool ok = after.recall[0] >= kMinRecall5 && after.ndcg[0] >= kMinNdcg5 && ablated_ok && secs < kLearningSeconds;
  std::string detail = "R@5=" + fmt(after.recall[0]) + " N@5=" + fmt(after.ndcg[0]) + " (init R@5=" +
                       fmt(before.recall[0]) + " N@5=" + fmt(before.ndcg[0]) + ") best_epoch=" +
                       std::to_string(full.history.best_epoch) + " no_cl=";
  detail += ablated_ok ? "R@5=" + fmt(ablated_report.recall[0]) + " N@5=" + fmt(ablated_report.ndcg[0])
                       : "diverged " + ablated_error;
  detail += " seconds_both_runs=" + fmt(secs);
  return {ok ? Status::kPass : Status::kFail, detail};
}

Outcome youshu_statistics() {
  const char* dir = std::getenv("BUNCA_YOUSHU_DIR");
  if (dir == nullptr || !fs::is_directory(dir)) {
    return {Status::kSkip, "set BUNCA_YOUSHU_DIR to the Youshu dataset directory to run"};
  }
  const Dataset ds = load_dataset(dir);
  const DatasetStats s = dataset_stats(ds);
  std::ostringstream avg;
  avg.setf(std::ios::fixed);
  avg.precision(2);
  avg << s.avg_items_per_bundle;
  const bool ok = s.num_users == 8039 && s.num_items == 32770 && s.num_bundles == 4771 &&
                  s.user_item_edges == 138515 && s.user_bundle_edges == 51377 && avg.str() == "37.03";
  return {ok ? Status::kPass : Status::kFail,
          "U=" + std::to_string(s.num_users) + " I=" + std::to_string(s.num_items) + " B=" +
              std::to_string(s.num_bundles) + " E_UI=" + std::to_string(s.user_item_edges) + " E_UB=" +
              std::to_string(s.user_bundle_edges) + " avg_I_per_B=" + avg.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "bunca_acceptance_determinism";
  fs::remove_all(root);
  const Dataset ds = synth_generate(SynthSpec{});
  write_dataset(ds, root / "data");
  std::ostringstream sink;
  auto train = [&](const std::string& out) {
    return run_cli({"train", "--dataset_dir", (root / "data").string(), "--out_dir", (root / out).string(),
                    "--epochs", "15", "--seed", "123"},
                   sink, sink);
  };
  const int c1 = train("a"), c2 = train("b");
  const std::string ck1 = slurp(root / "a" / "checkpoint.bin"), ck2 = slurp(root / "b" / "checkpoint.bin");
  const std::string m1 = slurp(root / "a" / "metrics.jsonl"), m2 = slurp(root / "b" / "metrics.jsonl");
  fs::remove_all(root);
  const bool ok = c1 == 0 && c2 == 0 && !ck1.empty() && ck1 == ck2 && !m1.empty() && m1 == m2;
  return {ok ? Status::kPass : Status::kFail,
          "exit=" + std::to_string(c1) + "," + std::to_string(c2) + " checkpoint_bytes=" + std::to_string(ck1.size()) +
              " identical=" + (ck1 == ck2 ? "yes" : "no") + " metrics_identical=" + (m1 == m2 ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient-fidelity", gradient_fidelity},
      {"oracle-equivalence", oracle_equivalence},
      {"normalization-invariants", normalization_invariants},
      {"analytic-spot-values", analytic_spot_values},
      {"end-to-end-learning", end_to_end_learning},
      {"dataset-statistics-youshu", youshu_statistics},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : (o.status == Status::kFail ? "FAIL" : "SKIP");
    failures += o.status == Status::kFail;
    std::cout << tag << ' ' << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
