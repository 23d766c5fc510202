#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gns/dataset/trajectory.hpp"
#include "gns/tensor/matrix.hpp"

namespace gns {

/// Legacy ASCII VTK PolyData for one frame: POINTS (z = 0 when dim is 2),
/// one VERTICES cell per particle and an int POINT_DATA scalar
/// "particle_type". Coordinates use the shortest decimal form that reads
/// back to the same double (at most 17 significant digits). Throws
/// ContractError unless dim is 2 or 3, IoError if the file cannot be written.
std::string vtk_polydata(const Matrix& positions, std::span<const std::int64_t> types);
void write_vtk(const Matrix& positions, std::span<const std::int64_t> types,
               const std::filesystem::path& path);

/// "<prefix>_<index>.vtk" with the index zero-padded to at least four
/// digits and to the width of frame_count - 1.
std::string vtk_frame_name(const std::string& prefix, std::size_t index, std::size_t frame_count);

/// One file per frame of `trajectory` in `directory` (created if needed).
std::vector<std::filesystem::path> export_vtk(const Trajectory& trajectory,
                                              const std::filesystem::path& directory,
                                              const std::string& prefix = "frame");

}  // namespace gns
