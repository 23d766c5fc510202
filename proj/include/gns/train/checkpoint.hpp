#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gns/core/model.hpp"
#include "gns/tensor/adam.hpp"
#include "gns/train/config.hpp"
#include "gns/train/sampler.hpp"

namespace gns {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  AdamState optimizer;
  std::uint64_t step = 0;
  SamplerState sampler;
  TrainConfig config;
  std::uint64_t dataset_fingerprint = 0;
  double elapsed_seconds = 0.0;  // wall clock spent training so far
};

/// File layout, little-endian:
///   8 bytes  magic "GNSCKPT\0"
///   u32      format version
///   u64      payload length in bytes
///   u32      CRC-32 of the payload
///   payload  JSON header (u64 length + UTF-8 text) with step, configs,
///            fingerprint, sampler engine state, elapsed time and tensor
///            shapes, then raw f64 blocks: parameters, Adam first moments,
///            Adam second moments; then the u64 epoch permutation.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
/// Throws CheckpointError on bad magic, unknown version, truncation or a
/// checksum mismatch.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Atomic write (temporary file, then rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gns
