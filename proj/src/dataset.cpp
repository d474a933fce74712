#include "bunca/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "bunca/error.hpp"
#include "bunca/random.hpp"

namespace bunca {

namespace {

using PairList = std::vector<std::pair<Index, Index>>;

const char* const kTrainFile = "user_bundle_train.txt";
const char* const kTuneFile = "user_bundle_tune.txt";
const char* const kTestFile = "user_bundle_test.txt";
const char* const kUserItemFile = "user_item.txt";
const char* const kBundleItemFile = "bundle_item.txt";
const char* const kCountsFile = "counts.txt";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::optional<Index> parse_id(std::string_view s) {
  if (s.empty()) return std::nullopt;
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

struct PairFile {
  std::string name;
  std::vector<std::tuple<Index, Index, std::size_t>> rows;  // left, right, line number
};

PairFile parse_pair_file(const std::filesystem::path& path) {
  PairFile f{path.filename().string(), {}};
  const std::string text = read_file(path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    std::string_view line(text.data() + pos, end - pos);
    ++line_no;
    pos = end + 1;
    const std::size_t tab = line.find('\t');
    std::optional<Index> left;
    std::optional<Index> right;
    if (tab != std::string_view::npos) {
      left = parse_id(line.substr(0, tab));
      right = parse_id(line.substr(tab + 1));
    }
    if (!left || !right) {
      throw DataError(f.name + ":" + std::to_string(line_no) + ": expected '<id><TAB><id>', got '" +
                      std::string(line) + "'");
    }
    f.rows.emplace_back(*left, *right, line_no);
  }
  return f;
}

SparseBinaryMatrix to_matrix(const PairFile& f, Index rows, Index cols, Dataset& ds) {
  PairList pairs;
  pairs.reserve(f.rows.size());
  for (const auto& [l, r, line] : f.rows) {
    if (l >= rows || r >= cols) {
      throw DataError(f.name + ":" + std::to_string(line) + ": id exceeds declared count (" +
                      std::to_string(rows) + " x " + std::to_string(cols) + ")");
    }
    pairs.emplace_back(l, r);
  }
  auto m = SparseBinaryMatrix::from_pairs(rows, cols, pairs);
  const std::size_t dups = pairs.size() - static_cast<std::size_t>(m.nnz());
  if (dups > 0) {
    ds.duplicate_lines += dups;
    ds.warnings.push_back(f.name + ": " + std::to_string(dups) + " duplicate line(s) ignored");
  }
  return m;
}

Index max_plus_one(std::initializer_list<std::pair<const PairFile*, bool>> files) {
  Index n = 0;
  for (const auto& [f, left] : files) {
    for (const auto& row : f->rows) n = std::max(n, (left ? std::get<0>(row) : std::get<1>(row)) + 1);
  }
  return n;
}

void write_pairs(const SparseBinaryMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c : m.row(r)) out << r << '\t' << c << '\n';
  }
}

void check_disjoint(const SparseBinaryMatrix& a, const char* an, const SparseBinaryMatrix& b, const char* bn) {
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c : a.row(r)) {
      if (b.contains(r, c)) {
        throw DataError(std::string("pair (") + std::to_string(r) + ", " + std::to_string(c) +
                        ") appears in both " + an + " and " + bn);
      }
    }
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  const PairFile train = parse_pair_file(dir / kTrainFile);
  const PairFile tune = parse_pair_file(dir / kTuneFile);
  const PairFile test = parse_pair_file(dir / kTestFile);
  const PairFile ui = parse_pair_file(dir / kUserItemFile);
  const PairFile bi = parse_pair_file(dir / kBundleItemFile);

  Dataset ds;
  ds.name = dir.filename().string();
  if (ds.name.empty()) ds.name = dir.parent_path().filename().string();
  const auto counts_path = dir / kCountsFile;
  if (std::filesystem::exists(counts_path)) {
    std::optional<Index> users, bundles, items;
    std::istringstream in(read_file(counts_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string key;
      std::string value;
      std::string extra;
      const auto n = (ls >> key >> value) ? parse_id(value) : std::nullopt;
      if (!n || (ls >> extra)) {
        throw DataError(std::string(kCountsFile) + ":" + std::to_string(line_no) + ": expected '<entity> <n>'");
      }
      if (key == "users") {
        users = n;
      } else if (key == "bundles") {
        bundles = n;
      } else if (key == "items") {
        items = n;
      } else {
        throw DataError(std::string(kCountsFile) + ":" + std::to_string(line_no) + ": unknown entity '" + key + "'");
      }
    }
    if (!users || !bundles || !items) throw DataError(std::string(kCountsFile) + ": needs users, bundles and items");
    ds.num_users = *users;
    ds.num_bundles = *bundles;
    ds.num_items = *items;
  } else {
    ds.num_users = max_plus_one({{&train, true}, {&tune, true}, {&test, true}, {&ui, true}});
    ds.num_bundles = max_plus_one({{&train, false}, {&tune, false}, {&test, false}, {&bi, true}});
    ds.num_items = max_plus_one({{&ui, false}, {&bi, false}});
  }

  ds.train = to_matrix(train, ds.num_users, ds.num_bundles, ds);
  ds.tune = to_matrix(tune, ds.num_users, ds.num_bundles, ds);
  ds.test = to_matrix(test, ds.num_users, ds.num_bundles, ds);
  ds.user_item = to_matrix(ui, ds.num_users, ds.num_items, ds);
  ds.bundle_item = to_matrix(bi, ds.num_bundles, ds.num_items, ds);
  check_disjoint(ds.train, kTrainFile, ds.tune, kTuneFile);
  check_disjoint(ds.train, kTrainFile, ds.test, kTestFile);
  check_disjoint(ds.tune, kTuneFile, ds.test, kTestFile);

  Index itemless = 0;
  for (Index b = 0; b < ds.num_bundles; ++b) {
    if (ds.bundle_item.row_size(b) == 0) ++itemless;
  }
  if (itemless > 0) ds.warnings.push_back(std::to_string(itemless) + " bundle(s) have no items");
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_pairs(ds.train, dir / kTrainFile);
  write_pairs(ds.tune, dir / kTuneFile);
  write_pairs(ds.test, dir / kTestFile);
  write_pairs(ds.user_item, dir / kUserItemFile);
  write_pairs(ds.bundle_item, dir / kBundleItemFile);
  std::ofstream out(dir / kCountsFile, std::ios::binary | std::ios::trunc);
  out << "users " << ds.num_users << "\nbundles " << ds.num_bundles << "\nitems " << ds.num_items << '\n';
  if (!out) throw DataError("cannot write " + (dir / kCountsFile).string());
}

DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats s;
  s.num_users = ds.num_users;
  s.num_items = ds.num_items;
  s.num_bundles = ds.num_bundles;
  s.user_item_edges = ds.user_item.nnz();
  s.user_bundle_edges = ds.train.nnz() + ds.tune.nnz() + ds.test.nnz();
  s.avg_items_per_bundle =
      ds.num_bundles > 0 ? static_cast<double>(ds.bundle_item.nnz()) / static_cast<double>(ds.num_bundles) : 0.0;
  return s;
}

InfluenceHistogram high_influence_distribution(const Dataset& ds) {
  std::vector<Index> popularity(static_cast<std::size_t>(ds.num_items), 0);
  for (Index i : ds.user_item.indices()) ++popularity[i];
  InfluenceHistogram h;
  for (Index b = 0; b < ds.bundle_item.rows(); ++b) {
    const auto items = ds.bundle_item.row(b);
    if (items.empty()) {
      ++h.empty_bundles;
      continue;
    }
    // Compare pop * n > total in integers to keep the strict inequality exact.
    Index total = 0;
    for (Index i : items) total += popularity[i];
    const auto n = static_cast<Index>(items.size());
    Index high = 0;
    for (Index i : items) {
      if (popularity[i] * n > total) ++high;
    }
    ++h.bundles_by_count[high];
  }
  return h;
}

Dataset synth_generate(const SynthSpec& spec) {
  if (spec.groups < 1 || spec.users_per_group < 1 || spec.bundles_per_group < 1 || spec.items_per_group < 2) {
    throw DataError("synthetic settings need groups, users and bundles >= 1 and items per group >= 2");
  }
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) throw DataError("noise rate must be in [0, 1)");
  const auto picked = static_cast<Index>(std::lround(0.6 * static_cast<double>(spec.bundles_per_group)));
  const Index n_test = std::max<Index>(1, std::lround(0.2 * static_cast<double>(picked)));
  const Index n_tune = std::lround(0.1 * static_cast<double>(picked));
  if (picked < 2 || picked - n_test - n_tune < 1) {
    throw DataError("synthetic settings too small: each user needs at least one train and one test bundle");
  }

  Rng rng(spec.seed);
  Dataset ds;
  ds.name = "synthetic";
  ds.num_users = spec.groups * spec.users_per_group;
  ds.num_bundles = spec.groups * spec.bundles_per_group;
  ds.num_items = spec.groups * spec.items_per_group;

  PairList bundle_items;
  std::vector<std::vector<Index>> items_of(static_cast<std::size_t>(ds.num_bundles));
  std::vector<Index> pool(static_cast<std::size_t>(spec.items_per_group));
  for (Index g = 0; g < spec.groups; ++g) {
    for (Index k = 0; k < spec.bundles_per_group; ++k) {
      const Index b = g * spec.bundles_per_group + k;
      const Index size = std::min<Index>(spec.items_per_group, 2 + static_cast<Index>(rng.uniform_index(3)));
      std::iota(pool.begin(), pool.end(), g * spec.items_per_group);
      // partial Fisher-Yates: the first `size` slots are a uniform sample
      for (Index s = 0; s < size; ++s) {
        const auto j = s + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(spec.items_per_group - s)));
        std::swap(pool[s], pool[j]);
        items_of[b].push_back(pool[s]);
        bundle_items.emplace_back(b, pool[s]);
      }
    }
  }

  PairList train, tune, test, user_items;
  std::vector<Index> bundles(static_cast<std::size_t>(spec.bundles_per_group));
  const Index other_items = ds.num_items - spec.items_per_group;
  for (Index u = 0; u < ds.num_users; ++u) {
    const Index g = u / spec.users_per_group;
    std::iota(bundles.begin(), bundles.end(), g * spec.bundles_per_group);
    rng.shuffle(std::span<Index>(bundles));
    std::vector<Index> touched;
    for (Index k = 0; k < picked; ++k) {
      auto& split = k < n_test ? test : (k < n_test + n_tune ? tune : train);
      split.emplace_back(u, bundles[k]);
      touched.insert(touched.end(), items_of[bundles[k]].begin(), items_of[bundles[k]].end());
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (Index i : touched) {
      if (other_items > 0 && rng.bernoulli(spec.noise)) {
        // uniform over items outside the user's group
        Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(other_items)));
        if (j >= g * spec.items_per_group) j += spec.items_per_group;
        user_items.emplace_back(u, j);
      } else {
        user_items.emplace_back(u, i);
      }
    }
  }
  ds.train = SparseBinaryMatrix::from_pairs(ds.num_users, ds.num_bundles, train);
  ds.tune = SparseBinaryMatrix::from_pairs(ds.num_users, ds.num_bundles, tune);
  ds.test = SparseBinaryMatrix::from_pairs(ds.num_users, ds.num_bundles, test);
  ds.user_item = SparseBinaryMatrix::from_pairs(ds.num_users, ds.num_items, user_items);
  ds.bundle_item = SparseBinaryMatrix::from_pairs(ds.num_bundles, ds.num_items, bundle_items);
  return ds;
}

Dataset toy_dataset() {
  Dataset ds;
  ds.name = "toy";
  ds.num_users = 6;
  ds.num_bundles = 5;
  ds.num_items = 8;
  ds.train = SparseBinaryMatrix::from_pairs(
      6, 5, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {3, 3}, {3, 4}, {4, 0}, {4, 3}, {5, 4}});
  ds.tune = SparseBinaryMatrix::from_pairs(6, 5, {{2, 0}});
  ds.test = SparseBinaryMatrix::from_pairs(6, 5, {{5, 1}, {0, 3}});
  ds.user_item = SparseBinaryMatrix::from_pairs(
      6, 8, {{0, 0}, {0, 1}, {0, 3}, {1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 5}, {3, 6}, {3, 7}, {4, 0}, {4, 6}, {5, 7}});
  ds.bundle_item = SparseBinaryMatrix::from_pairs(
      5, 8, {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {2, 4}, {2, 5}, {3, 5}, {3, 6}, {4, 6}, {4, 7}, {4, 0}});
  return ds;
}

ModelGraphs build_graphs(const Dataset& ds, std::int64_t theta_up, std::int64_t theta_bc) {
  return ModelGraphs::build(ds.train, ds.user_item, ds.bundle_item, theta_up, theta_bc);
}

void export_causation(const Model& model, const ModelGraphs& graphs, Index top_n, std::ostream& out) {
  if (top_n < 1) throw ConfigError("top_n must be positive");
  const auto& cfg = model.config().causation;
  struct View {
    const char* name;
    const MpcNet* net;
    const SparseBinaryMatrix* mask;
  };
  const View views[] = {{"up", &model.up_net(), &graphs.up_mask}, {"bc", &model.bc_net(), &graphs.bc_mask}};
  out << std::setprecision(17);
  for (const auto& view : views) {
    out << "# view=" << view.name << '\n';
    const CausationMatrices a = compute_causation(model.items(), *view.net, *view.mask, cfg);
    const auto& offsets = view.mask->offsets();
    const auto& src = view.mask->indices();
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
      const Matrix& w = a.weights[l].value();
      for (Index dst = 0; dst < view.mask->rows(); ++dst) {
        std::vector<Index> order(static_cast<std::size_t>(offsets[dst + 1] - offsets[dst]));
        std::iota(order.begin(), order.end(), offsets[dst]);
        std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return w(x, 0) > w(y, 0); });
        const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(top_n));
        for (std::size_t k = 0; k < keep; ++k) {
          const Index e = order[k];
          out << l << '\t' << src[e] << '\t' << dst << '\t' << w(e, 0);
          if (w(e, 0) >= 0.5) out << "\thigh";
          out << '\n';
        }
      }
    }
  }
}

}  // namespace bunca
