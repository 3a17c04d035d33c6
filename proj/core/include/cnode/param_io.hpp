#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace cnode {

// Parameter snapshot: the ASCII line "cnode-params v1 <count>\n" followed by
// <count> little-endian IEEE-754 binary64 values.

void write_params(const std::filesystem::path& path, std::span<const double> params);

/// Throws MissingArtifactError if the file is absent and ConfigError if it is malformed.
std::vector<double> read_params(const std::filesystem::path& path);

}  // namespace cnode
