#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gns/tensor/matrix.hpp"

namespace gns {

/// Position history of one simulation plus its per-particle material ids.
/// Positions are stored C-order as (n_time_steps, n_particles, n_dimensions).
struct Trajectory {
  std::size_t steps = 0;
  std::size_t particles = 0;
  std::size_t dim = 0;
  std::vector<double> positions;
  std::vector<std::int64_t> types;

  Trajectory() = default;
  Trajectory(std::size_t steps, std::size_t particles, std::size_t dim);

  double& at(std::size_t t, std::size_t p, std::size_t d) {
    return positions[(t * particles + p) * dim + d];
  }
  double at(std::size_t t, std::size_t p, std::size_t d) const {
    return positions[(t * particles + p) * dim + d];
  }

  /// particles x dim snapshot of step `t`.
  Matrix frame(std::size_t t) const;
  void set_frame(std::size_t t, const Matrix& frame);

  /// Throws ContractError if sizes or particle types are inconsistent.
  void validate() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct TrajectorySet {
  std::vector<Trajectory> trajectories;

  std::size_t size() const noexcept { return trajectories.size(); }
  const Trajectory& operator[](std::size_t i) const { return trajectories[i]; }
  Trajectory& operator[](std::size_t i) { return trajectories[i]; }

  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

/// 64-bit FNV-1a over shapes, positions and types; identifies a dataset in
/// checkpoints.
std::uint64_t fingerprint(const TrajectorySet& set);

}  // namespace gns
