#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gns {

/// Strided partition: worker w owns order[w], order[w + W], ... Shard sizes
/// differ by at most one.
std::vector<std::vector<std::size_t>> shard_windows(std::span<const std::size_t> order,
                                                    std::size_t workers);

struct SamplerState {
  std::string engine;                // std::mt19937_64 text state
  std::vector<std::uint64_t> order;  // current epoch permutation
  std::uint64_t epoch = 0;
  std::uint64_t cursor = 0;          // next unused position in `order`

  friend bool operator==(const SamplerState&, const SamplerState&) = default;
};

/// Seeded stream of window indices. Each epoch is a fresh permutation of all
/// windows; an epoch yields floor(count / global_batch) steps and the
/// remainder is dropped. Within a step, position j * workers + w of the
/// global batch belongs to worker w, so over an epoch each worker draws
/// exactly its strided shard of the permutation.
class WindowSampler {
 public:
  WindowSampler(std::size_t window_count, std::size_t workers, std::size_t batch_size,
                std::uint64_t seed);
  WindowSampler(std::size_t window_count, std::size_t workers, std::size_t batch_size,
                SamplerState state);

  /// Global batch of the next step, workers * batch_size window indices.
  std::vector<std::size_t> next();

  /// Windows of worker `w` inside a global batch returned by next().
  std::vector<std::size_t> worker_slice(std::span<const std::size_t> global, std::size_t w) const;

  const std::vector<std::uint64_t>& order() const { return state_.order; }
  SamplerState state() const;

 private:
  void new_epoch();

  std::size_t count_;
  std::size_t workers_;
  std::size_t batch_;
  std::mt19937_64 engine_;
  SamplerState state_;
};

}  // namespace gns
