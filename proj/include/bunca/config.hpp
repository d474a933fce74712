#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bunca/training.hpp"

namespace bunca {

struct RunConfig {
  TrainConfig train;
  std::string dataset_dir;
  std::string out_dir;
  std::string checkpoint;
  bool mask_tune = true;
};

// Every accepted key, in dump order.
const std::vector<std::string>& config_keys();

// Throws ConfigError naming the key for unknown keys or unparsable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment; blank lines ignored.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Text that parse_config maps back to the same config.
std::string dump_config(const RunConfig& config);

// Comma separated positive integers, e.g. "10,20".
std::vector<Index> parse_ks(std::string_view text);

}  // namespace bunca
