#include "bunca/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bunca/error.hpp"

namespace bunca {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for key " + std::string(key));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_ks(const std::vector<Index>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ks[i]);
  }
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "dataset_dir", "out_dir", "checkpoint", "d",          "H",          "H_sub",    "L",
      "alpha",       "beta",    "gamma",      "mu",         "tau",        "lambda1",  "lambda2",
      "lr",          "batch_size", "epochs",  "eval_every", "patience",   "seed",     "theta_up",
      "theta_bc",    "ks",      "negatives",  "select_k",   "regularize_batch_only", "mask_tune"};
  return keys;
}

std::vector<Index> parse_ks(std::string_view text) {
  std::vector<Index> ks;
  while (true) {
    const auto comma = text.find(',');
    const auto part = trim(text.substr(0, comma));
    const auto k = parse_number<Index>("ks", part);
    if (k < 1) bad_value("ks", part);
    ks.push_back(k);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ks;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  TrainConfig& t = c.train;
  if (key == "dataset_dir") c.dataset_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "d") t.d = parse_number<Index>(key, value);
  else if (key == "H") t.H = parse_number<int>(key, value);
  else if (key == "H_sub") t.H_sub = parse_number<int>(key, value);
  else if (key == "L") t.L = parse_number<int>(key, value);
  else if (key == "alpha") t.alpha = parse_number<double>(key, value);
  else if (key == "beta") t.beta = parse_number<double>(key, value);
  else if (key == "gamma") t.gamma = parse_number<double>(key, value);
  else if (key == "mu") t.mu = parse_number<double>(key, value);
  else if (key == "tau") t.tau = parse_number<double>(key, value);
  else if (key == "lambda1") t.lambda1 = parse_number<double>(key, value);
  else if (key == "lambda2") t.lambda2 = parse_number<double>(key, value);
  else if (key == "lr") t.lr = parse_number<double>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<Index>(key, value);
  else if (key == "epochs") t.epochs = parse_number<int>(key, value);
  else if (key == "eval_every") t.eval_every = parse_number<int>(key, value);
  else if (key == "patience") t.patience = parse_number<int>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "theta_up") t.theta_up = parse_number<std::int64_t>(key, value);
  else if (key == "theta_bc") t.theta_bc = parse_number<std::int64_t>(key, value);
  else if (key == "ks") t.ks = parse_ks(value);
  else if (key == "negatives") t.negatives = parse_number<int>(key, value);
  else if (key == "select_k") t.select_k = parse_number<Index>(key, value);
  else if (key == "regularize_batch_only") t.regularize_batch_only = parse_bool(key, value);
  else if (key == "mask_tune") c.mask_tune = parse_bool(key, value);
  else throw ConfigError("unknown config key " + std::string(key));
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const RunConfig& c) {
  const TrainConfig& t = c.train;
  std::ostringstream o;
  o << "dataset_dir = " << c.dataset_dir << '\n'
    << "out_dir = " << c.out_dir << '\n'
    << "checkpoint = " << c.checkpoint << '\n'
    << "d = " << t.d << '\n'
    << "H = " << t.H << '\n'
    << "H_sub = " << t.H_sub << '\n'
    << "L = " << t.L << '\n'
    << "alpha = " << fmt_double(t.alpha) << '\n'
    << "beta = " << fmt_double(t.beta) << '\n'
    << "gamma = " << fmt_double(t.gamma) << '\n'
    << "mu = " << fmt_double(t.mu) << '\n'
    << "tau = " << fmt_double(t.tau) << '\n'
    << "lambda1 = " << fmt_double(t.lambda1) << '\n'
    << "lambda2 = " << fmt_double(t.lambda2) << '\n'
    << "lr = " << fmt_double(t.lr) << '\n'
    << "batch_size = " << t.batch_size << '\n'
    << "epochs = " << t.epochs << '\n'
    << "eval_every = " << t.eval_every << '\n'
    << "patience = " << t.patience << '\n'
    << "seed = " << t.seed << '\n'
    << "theta_up = " << t.theta_up << '\n'
    << "theta_bc = " << t.theta_bc << '\n'
    << "ks = " << fmt_ks(t.ks) << '\n'
    << "negatives = " << t.negatives << '\n'
    << "select_k = " << t.select_k << '\n'
    << "regularize_batch_only = " << (t.regularize_batch_only ? "true" : "false") << '\n'
    << "mask_tune = " << (c.mask_tune ? "true" : "false") << '\n';
  return o.str();
}

}  // namespace bunca
