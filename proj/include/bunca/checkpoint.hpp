#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bunca/params.hpp"

namespace bunca {

// Layout, all integers little-endian:
//   u8 version | "BNCA" | u32 tensor count |
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols,
//               rows*cols IEEE-754 binary64 values in row-major order.
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params);
ParameterSet decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
// Throws FormatError on version mismatch, bad magic, truncation, or trailing bytes.
ParameterSet load_checkpoint(const std::filesystem::path& path);

// Copies values from source into target by name. Throws FormatError for a name
// missing on either side and DimensionError naming a tensor whose shape differs.
void assign_parameters(const ParameterSet& target, const ParameterSet& source);

}  // namespace bunca
