#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bunca/model.hpp"
#include "bunca/sparse.hpp"

namespace bunca {

struct Dataset {
  std::string name;
  Index num_users = 0;
  Index num_bundles = 0;
  Index num_items = 0;
  SparseBinaryMatrix train;        // users x bundles
  SparseBinaryMatrix tune;         // users x bundles
  SparseBinaryMatrix test;         // users x bundles
  SparseBinaryMatrix user_item;    // users x items
  SparseBinaryMatrix bundle_item;  // bundles x items
  std::size_t duplicate_lines = 0;
  std::vector<std::string> warnings;
};

// Reads user_bundle_{train,tune,test}.txt, user_item.txt, bundle_item.txt and
// the optional counts.txt from dir. Lines are "left<TAB>right", 0-based.
// Throws DataError naming file and line on any violation.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes the same layout (including counts.txt), one sorted pair per line.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct DatasetStats {
  Index num_users = 0;
  Index num_items = 0;
  Index num_bundles = 0;
  Index user_item_edges = 0;
  Index user_bundle_edges = 0;  // over all three splits
  double avg_items_per_bundle = 0.0;
};

DatasetStats dataset_stats(const Dataset& ds);

struct InfluenceHistogram {
  // number of high-influence items -> number of bundles
  std::map<Index, Index> bundles_by_count;
  Index empty_bundles = 0;
};

// Popularity is the user-item interaction count; an item is high-influence in
// a bundle when its popularity strictly exceeds the bundle's mean popularity.
InfluenceHistogram high_influence_distribution(const Dataset& ds);

struct SynthSpec {
  Index groups = 4;
  Index users_per_group = 12;
  Index bundles_per_group = 8;
  Index items_per_group = 10;
  double noise = 0.05;
  std::uint64_t seed = 7;
};

// Planted block structure: each user takes a random 60% of its group's
// bundles, split 70/10/20 with at least one test bundle; bundles hold 2-4
// same-group items; user-item rows are the distinct items of the user's
// bundles, each replaced by a random other-group item with probability noise.
Dataset synth_generate(const SynthSpec& spec);

// Fixed 6-user / 5-bundle / 8-item instance used by gradient checks.
Dataset toy_dataset();

ModelGraphs build_graphs(const Dataset& ds, std::int64_t theta_up = 1, std::int64_t theta_bc = 1);

// For each sub-view, prospect and destination item, writes the top_n incoming
// causation edges as "prospect<TAB>src<TAB>dst<TAB>weight", appending
// "<TAB>high" when weight >= 0.5. Sections start with "# view=up" / "# view=bc".
void export_causation(const Model& model, const ModelGraphs& graphs, Index top_n, std::ostream& out);

}  // namespace bunca
