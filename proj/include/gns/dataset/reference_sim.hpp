#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "gns/dataset/metadata.hpp"
#include "gns/dataset/trajectory.hpp"

namespace gns {

/// Settings for the brute-force ground-truth simulator.
///
/// Physics per step, semi-implicit Euler at `dt`:
///   a_i = gravity * e_last + sum_j stiffness * (1 - d_ij / range) * (x_i - x_j) / d_ij,  d_ij < range
///   v <- v + a dt,  x <- x + v dt
/// then every coordinate that left the box is mirrored back inside and its
/// velocity component is reversed and scaled by `restitution`.
///
/// Initial state: a jittered lattice block (spacing `lattice_spacing`)
/// placed uniformly at random inside the box, moving with a random common
/// velocity of magnitude up to `initial_speed`.
struct GeneratorConfig {
  std::size_t particles = 64;
  std::size_t steps = 200;
  std::size_t trajectories = 1;
  std::size_t dim = 2;
  double dt = 0.005;
  double gravity = -9.81;  // along the last axis
  double restitution = 0.6;
  double stiffness = 400.0;
  double repulsion_range = 0.04;
  double connectivity_radius = 0.06;
  double lattice_spacing = 0.04;
  double lattice_jitter = 0.1;  // fraction of the spacing
  double initial_speed = 1.0;
  std::vector<std::pair<double, double>> bounds = {{0.1, 0.9}, {0.1, 0.9}};

  /// Throws ConfigError naming the offending setting.
  void validate() const;
};

/// Deterministic in (config, seed). Metadata statistics are computed from the
/// generated trajectories.
std::pair<TrajectorySet, Metadata> generate_reference(const GeneratorConfig& config,
                                                      std::uint64_t seed);

/// Single trajectory from an explicit initial state (particles x dim each).
Trajectory simulate(const GeneratorConfig& config, const Matrix& initial_positions,
                    const Matrix& initial_velocities);

}  // namespace gns
