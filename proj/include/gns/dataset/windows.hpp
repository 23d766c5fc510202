#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gns/dataset/trajectory.hpp"
#include "gns/tensor/matrix.hpp"

namespace gns {

/// Number of consecutive input positions a GNS sees (five velocities).
inline constexpr std::size_t kInputSequenceLength = 6;

/// Location of one training example inside a TrajectorySet.
struct WindowIndex {
  std::size_t trajectory = 0;
  std::size_t start = 0;

  friend bool operator==(const WindowIndex&, const WindowIndex&) = default;
};

/// `input_len` consecutive frames starting at `start`, plus the frame that
/// follows them as the prediction target.
struct TrainingWindow {
  std::size_t trajectory = 0;
  std::size_t start = 0;
  std::vector<Matrix> inputs;  // input_len frames, each particles x dim
  Matrix target;               // particles x dim
  std::vector<std::int64_t> types;
};

/// Every window of every trajectory, trajectory-major, start ascending. A
/// trajectory of T steps yields T - input_len windows. Throws ContractError
/// naming the first trajectory with fewer than input_len + 1 steps.
std::vector<WindowIndex> enumerate_windows(const TrajectorySet& set,
                                           std::size_t input_len = kInputSequenceLength);

TrainingWindow make_window(const TrajectorySet& set, WindowIndex index,
                           std::size_t input_len = kInputSequenceLength);

}  // namespace gns
