#include "gns/dataset/windows.hpp"

#include <string>

#include "gns/errors.hpp"

namespace gns {

std::vector<WindowIndex> enumerate_windows(const TrajectorySet& set, std::size_t input_len) {
  std::vector<WindowIndex> out;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const std::size_t steps = set[k].steps;
    if (steps < input_len + 1) {
      throw ContractError("enumerate_windows: trajectory " + std::to_string(k) + " has " +
                          std::to_string(steps) + " steps, needs at least " +
                          std::to_string(input_len + 1));
    }
    for (std::size_t t0 = 0; t0 + input_len < steps; ++t0) out.push_back({k, t0});
  }
  return out;
}

TrainingWindow make_window(const TrajectorySet& set, WindowIndex index, std::size_t input_len) {
  if (index.trajectory >= set.size()) {
    throw IndexError("make_window: trajectory " + std::to_string(index.trajectory) + " of " +
                     std::to_string(set.size()));
  }
  const Trajectory& t = set[index.trajectory];
  if (index.start + input_len >= t.steps) {
    throw IndexError("make_window: window at step " + std::to_string(index.start) +
                     " does not fit trajectory " + std::to_string(index.trajectory));
  }
  TrainingWindow w;
  w.trajectory = index.trajectory;
  w.start = index.start;
  for (std::size_t i = 0; i < input_len; ++i) w.inputs.push_back(t.frame(index.start + i));
  w.target = t.frame(index.start + input_len);
  w.types = t.types;
  return w;
}

}  // namespace gns
