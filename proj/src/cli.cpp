#include "bunca/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bunca/checkpoint.hpp"
#include "bunca/config.hpp"
#include "bunca/error.hpp"

namespace bunca {

namespace fs = std::filesystem;

namespace {

using Overrides = std::map<std::string, std::optional<std::string>>;

void add_config_flags(CLI::App& cmd, Overrides& overrides) {
  for (const auto& key : config_keys()) {
    auto& slot = overrides[key];
    cmd.add_option_function<std::string>("--" + key, [&slot](const std::string& v) { slot = v; },
                                         "override config key " + key);
  }
}

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  for (const auto& [key, value] : overrides) {
    if (value) apply_setting(config, key, *value);
  }
}

void require_key(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError("missing required config key " + std::string(key));
}

void print_warnings(const Dataset& ds, std::ostream& err) {
  for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
}

// Config stored next to a checkpoint unless given explicitly.
RunConfig config_for_checkpoint(const std::string& checkpoint, const std::string& config_path) {
  const fs::path path = config_path.empty() ? fs::path(checkpoint).parent_path() / "config.txt" : fs::path(config_path);
  return load_config(path);
}

struct LoadedModel {
  Dataset dataset;
  ModelGraphs graphs;
  std::optional<Model> model;
  RunConfig config;
};

LoadedModel load_trained(const std::string& checkpoint, const std::string& config_path, const std::string& dataset_dir,
                         std::ostream& err) {
  require_key(checkpoint, "checkpoint");
  LoadedModel m;
  m.config = config_for_checkpoint(checkpoint, config_path);
  if (!dataset_dir.empty()) m.config.dataset_dir = dataset_dir;
  require_key(m.config.dataset_dir, "dataset_dir");
  m.config.train.validate();
  const ParameterSet stored = load_checkpoint(checkpoint);
  m.dataset = load_dataset(m.config.dataset_dir);
  print_warnings(m.dataset, err);
  m.graphs = build_graphs(m.dataset, m.config.train.theta_up, m.config.train.theta_bc);
  m.model.emplace(m.config.train.model_config(), m.dataset.num_users, m.dataset.num_bundles, m.dataset.num_items,
                  m.config.train.seed);
  assign_parameters(m.model->parameters(), stored);
  return m;
}

std::vector<const SparseBinaryMatrix*> test_masks(const Dataset& ds, bool mask_tune) {
  std::vector<const SparseBinaryMatrix*> masks{&ds.train};
  if (mask_tune) masks.push_back(&ds.tune);
  return masks;
}

int cmd_train(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& err) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
  apply_overrides(config, overrides);
  require_key(config.dataset_dir, "dataset_dir");
  require_key(config.out_dir, "out_dir");
  config.train.validate();
  if (!fs::is_directory(config.dataset_dir)) throw ConfigError("dataset_dir is not a directory: " + config.dataset_dir);

  const Dataset ds = load_dataset(config.dataset_dir);
  print_warnings(ds, err);
  fs::create_directories(config.out_dir);
  const fs::path out_dir(config.out_dir);
  const fs::path checkpoint = config.checkpoint.empty() ? out_dir / "checkpoint.bin" : fs::path(config.checkpoint);

  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics) throw ConfigError("cannot write to out_dir " + config.out_dir);
  const FitResult result = fit(config.train, ds, &metrics);
  metrics.close();

  save_checkpoint(result.model.parameters(), checkpoint);
  RunConfig stored = config;
  stored.checkpoint = checkpoint.string();
  std::ofstream(out_dir / "config.txt", std::ios::binary | std::ios::trunc) << dump_config(stored);

  double wall = 0.0;
  for (const auto& r : result.history.epochs) wall += r.wall_seconds;
  err << "trained " << result.history.epochs.size() << " epoch(s) in " << wall << " s, best epoch "
      << result.history.best_epoch << '\n';
  const ModelGraphs graphs = build_graphs(ds, config.train.theta_up, config.train.theta_bc);
  if (ds.test.nnz() > 0) {
    const MetricsReport report = evaluate_all(result.model, graphs, ds, config.train.ks, config.mask_tune);
    out << to_json(report) << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& config_path, const std::string& dataset_dir,
                 const std::string& ks, std::ostream& out, std::ostream& err) {
  LoadedModel m = load_trained(checkpoint, config_path, dataset_dir, err);
  const auto k_list = ks.empty() ? m.config.train.ks : parse_ks(ks);
  if (m.dataset.test.nnz() == 0) throw DataError("test split is empty");
  out << to_json(evaluate_all(*m.model, m.graphs, m.dataset, k_list, m.config.mask_tune)) << '\n';
  return kExitOk;
}

int cmd_recommend(const std::string& checkpoint, const std::string& config_path, const std::string& dataset_dir,
                  const std::string& users, Index k, std::ostream& out, std::ostream& err) {
  if (k < 1) throw ConfigError("k must be positive");
  LoadedModel m = load_trained(checkpoint, config_path, dataset_dir, err);
  std::vector<Index> ids;
  if (users.empty()) {
    for (Index u = 0; u < m.dataset.num_users; ++u) ids.push_back(u);
  } else {
    std::stringstream ss(users);
    for (std::string part; std::getline(ss, part, ',');) {
      try {
        std::size_t used = 0;
        ids.push_back(static_cast<Index>(std::stoll(part, &used)));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::logic_error&) {
        throw ConfigError("invalid user id '" + part + "'");
      }
    }
  }
  const ForwardState state = forward(*m.model, m.graphs);
  const Matrix scores = score_matrix(state);
  const auto masks = test_masks(m.dataset, true);
  for (Index u : ids) {
    if (u < 0 || u >= m.dataset.num_users) throw DataError("unknown user id " + std::to_string(u));
    const auto ranking = rank_scores(
        std::span<const double>(scores.row(u).data(), static_cast<std::size_t>(scores.cols())), u, masks, k);
    if (ranking.bundles.empty()) err << "warning: every bundle is masked for user " << u << '\n';
    out << u << '\t';
    for (std::size_t i = 0; i < ranking.bundles.size(); ++i) out << (i ? "," : "") << ranking.bundles[i];
    out << '\n';
  }
  return kExitOk;
}

int cmd_stats(const std::string& dir, std::ostream& out, std::ostream& err) {
  require_key(dir, "dataset");
  const Dataset ds = load_dataset(dir);
  print_warnings(ds, err);
  const DatasetStats s = dataset_stats(ds);
  const InfluenceHistogram h = high_influence_distribution(ds);
  nlohmann::ordered_json j;
  j["users"] = s.num_users;
  j["items"] = s.num_items;
  j["bundles"] = s.num_bundles;
  j["user_item_edges"] = s.user_item_edges;
  j["user_bundle_edges"] = s.user_bundle_edges;
  j["avg_items_per_bundle"] = s.avg_items_per_bundle;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [count, bundles] : h.bundles_by_count) hist[std::to_string(count)] = bundles;
  j["high_influence_items"] = hist;
  j["empty_bundles"] = h.empty_bundles;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, double tolerance, std::ostream& out) {
  GradcheckOptions opts;
  opts.tolerance = tolerance;
  const GradcheckReport r = toy_gradcheck(opts, seed);
  nlohmann::ordered_json j;
  j["passed"] = r.passed;
  j["max_rel_error"] = r.max_rel_error;
  j["tolerance"] = tolerance;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"coords", e.coords_checked},
                       {"max_abs_error", e.max_abs_error},
                       {"max_rel_error", e.max_rel_error}});
  }
  j["tensors"] = entries;
  out << j.dump() << '\n';
  return r.passed ? kExitOk : kExitFailure;
}

int cmd_export(const std::string& checkpoint, const std::string& config_path, const std::string& dataset_dir,
               Index top, const std::string& output, std::ostream& out, std::ostream& err) {
  if (top < 1) throw ConfigError("top must be positive");
  LoadedModel m = load_trained(checkpoint, config_path, dataset_dir, err);
  if (output.empty()) {
    export_causation(*m.model, m.graphs, top, out);
    return kExitOk;
  }
  std::ofstream f(output, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + output);
  export_causation(*m.model, m.graphs, top, f);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bunca: bundle recommendation with item-level causation"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, dataset_dir, ks, users, output, out_dir;
  Index k = 10, top = 5;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  Overrides overrides;
  SynthSpec synth;

  auto* train = app.add_subcommand("train", "train a model and write checkpoint, metrics and config");
  train->add_option("--config", config_path, "key = value config file");
  add_config_flags(*train, overrides);

  auto add_model_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    cmd->add_option("--config", config_path, "config file (default: config.txt next to the checkpoint)");
    cmd->add_option("--dataset", dataset_dir, "dataset directory (default: dataset_dir from the config)");
  };
  auto* evaluate = app.add_subcommand("evaluate", "print test-split metrics as JSON");
  add_model_inputs(evaluate);
  evaluate->add_option("--ks", ks, "comma separated K list");

  auto* recommend = app.add_subcommand("recommend", "print top-K bundles per user");
  add_model_inputs(recommend);
  recommend->add_option("--users", users, "comma separated user ids (default: all)");
  recommend->add_option("--k", k, "list length");

  auto* stats = app.add_subcommand("stats", "dataset statistics and high-influence item histogram");
  stats->add_option("--dataset", dataset_dir, "dataset directory")->required();

  auto* synth_cmd = app.add_subcommand("synth", "write a planted-structure synthetic dataset");
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--groups", synth.groups);
  synth_cmd->add_option("--users-per-group", synth.users_per_group);
  synth_cmd->add_option("--bundles-per-group", synth.bundles_per_group);
  synth_cmd->add_option("--items-per-group", synth.items_per_group);
  synth_cmd->add_option("--noise", synth.noise);
  synth_cmd->add_option("--seed", synth.seed);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the full loss on the toy instance");
  grad->add_option("--seed", seed);
  grad->add_option("--tolerance", tolerance);

  auto* exp = app.add_subcommand("export-causation", "write top causation edges per destination item");
  add_model_inputs(exp);
  exp->add_option("--top", top, "edges kept per destination item");
  exp->add_option("--output", output, "output file (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(config_path, overrides, out, err);
    if (*evaluate) return cmd_evaluate(checkpoint, config_path, dataset_dir, ks, out, err);
    if (*recommend) return cmd_recommend(checkpoint, config_path, dataset_dir, users, k, out, err);
    if (*stats) return cmd_stats(dataset_dir, out, err);
    if (*synth_cmd) {
      write_dataset(synth_generate(synth), out_dir);
      return kExitOk;
    }
    if (*grad) return cmd_gradcheck(seed, tolerance, out);
    if (*exp) return cmd_export(checkpoint, config_path, dataset_dir, top, output, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitFailure;
}

}  // namespace bunca
