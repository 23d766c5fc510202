#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gns/dataset/trajectory.hpp"

namespace gns {

using Bytes = std::vector<std::uint8_t>;

/// One decoded .npy array. `data` holds the raw little-endian payload.
struct NpyArray {
  std::string descr;  // numpy dtype string, e.g. "<f8"
  std::vector<std::size_t> shape;
  bool fortran_order = false;
  Bytes data;

  std::size_t element_count() const;
  /// Payload converted to doubles; accepts <f4 and <f8.
  std::vector<double> as_doubles() const;
  /// Payload converted to int64; accepts signed/unsigned 1, 2, 4, 8 byte ints.
  std::vector<std::int64_t> as_int64() const;
};

/// Parses npy format 1.0, 2.0 or 3.0. Throws CodecError on bad magic, an
/// unparsable header, or a payload whose size disagrees with the shape.
NpyArray decode_npy(std::span<const std::uint8_t> bytes);
/// Emits npy 1.0 with the header padded to a 64-byte boundary.
Bytes encode_npy(const std::string& descr, std::span<const std::size_t> shape,
                 std::span<const std::uint8_t> payload);
Bytes encode_npy(std::span<const std::size_t> shape, std::span<const double> values);
Bytes encode_npy(std::span<const std::size_t> shape, std::span<const std::int64_t> values);

struct ZipMember {
  std::string name;
  Bytes data;
};

/// Reads every member of a zip archive through its central directory.
/// Stored and deflated members are accepted, zip64 size fields included.
/// CRC-32 of every member is verified.
std::vector<ZipMember> read_zip(std::span<const std::uint8_t> archive);
/// Writes an uncompressed archive with fixed timestamps (byte-reproducible).
Bytes write_zip(std::span<const ZipMember> members);

/// Trajectory archive layout: members "trajectory_<k>_positions.npy"
/// (float, shape (steps, particles, dim)), "trajectory_<k>_types.npy"
/// (integer, shape (particles,)) and "n_trajectories.npy" (int64 scalar).
TrajectorySet read_npz(const std::filesystem::path& path);
TrajectorySet decode_npz(std::span<const std::uint8_t> archive);
void write_npz(const std::filesystem::path& path, const TrajectorySet& set);
Bytes encode_npz(const TrajectorySet& set);

Bytes read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gns
