#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gns {

/// Per-dimension normalization statistics in finite-difference units
/// (position change per step, no division by dt).
struct NormalizationStats {
  std::vector<double> vel_mean;
  std::vector<double> vel_std;
  std::vector<double> acc_mean;
  std::vector<double> acc_std;
};

/// Dataset descriptor stored next to the trajectory archives.
struct Metadata {
  std::vector<std::pair<double, double>> bounds;  // [low, high] per dimension
  std::size_t sequence_length = 0;
  double default_connectivity_radius = 0.0;
  std::size_t dim = 0;
  double dt = 0.0;
  NormalizationStats stats;
  /// Keys not listed above, carried through a read/write cycle untouched.
  nlohmann::json extra = nlohmann::json::object();

  /// Throws ParseError on any violated invariant (dim, bounds order,
  /// statistic lengths, positive std).
  void validate() const;
};

Metadata parse_metadata(std::string_view json_text);
Metadata read_metadata(const std::filesystem::path& path);

nlohmann::json to_json(const Metadata& meta);
void write_metadata(const std::filesystem::path& path, const Metadata& meta);

}  // namespace gns
