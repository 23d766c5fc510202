#include "gns/dataset/reference_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gns/dataset/statistics.hpp"
#include "gns/errors.hpp"

namespace gns {

void GeneratorConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("generator: dim must be 2 or 3");
  if (particles == 0) throw ConfigError("generator: particles must be positive");
  if (steps < 2) throw ConfigError("generator: steps must be at least 2");
  if (trajectories == 0) throw ConfigError("generator: trajectories must be positive");
  if (!(dt > 0.0)) throw ConfigError("generator: dt must be positive");
  if (!(restitution >= 0.0 && restitution <= 1.0)) {
    throw ConfigError("generator: restitution must lie in [0, 1]");
  }
  if (!(stiffness >= 0.0)) throw ConfigError("generator: stiffness must be non-negative");
  if (!(repulsion_range > 0.0)) throw ConfigError("generator: repulsion range must be positive");
  if (!(connectivity_radius > 0.0)) throw ConfigError("generator: connectivity radius must be positive");
  if (!(lattice_spacing >= 0.0)) throw ConfigError("generator: lattice spacing must be non-negative");
  if (!(initial_speed >= 0.0)) throw ConfigError("generator: initial speed must be non-negative");
  if (bounds.size() != dim) throw ConfigError("generator: bounds needs one [low, high] pair per dimension");
  for (const auto& [low, high] : bounds) {
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
      throw ConfigError("generator: bounds are degenerate (need low < high)");
    }
  }
}

Trajectory simulate(const GeneratorConfig& config, const Matrix& initial_positions,
                    const Matrix& initial_velocities) {
  config.validate();
  const std::size_t n = initial_positions.rows();
  const std::size_t dim = config.dim;
  if (initial_positions.cols() != dim || !initial_velocities.same_shape(initial_positions)) {
    throw ConfigError("generator: initial state must be particles x dim");
  }
  Trajectory traj(config.steps, n, dim);
  Matrix x = initial_positions;
  Matrix v = initial_velocities;
  Matrix a(n, dim);
  traj.set_frame(0, x);

  const double range = config.repulsion_range;
  const double range2 = range * range;
  for (std::size_t t = 1; t < config.steps; ++t) {
    a.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) a(i, dim - 1) = config.gravity;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          const double r = x(i, d) - x(j, d);
          d2 += r * r;
        }
        if (d2 >= range2 || d2 == 0.0) continue;
        const double dist = std::sqrt(d2);
        const double f = config.stiffness * (1.0 - dist / range) / dist;
        for (std::size_t d = 0; d < dim; ++d) {
          const double r = x(i, d) - x(j, d);
          a(i, d) += f * r;
          a(j, d) -= f * r;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        v(i, d) += a(i, d) * config.dt;
        x(i, d) += v(i, d) * config.dt;
        const auto [low, high] = config.bounds[d];
        if (x(i, d) < low) {
          x(i, d) = low + config.restitution * (low - x(i, d));
          v(i, d) = -config.restitution * v(i, d);
        } else if (x(i, d) > high) {
          x(i, d) = high - config.restitution * (x(i, d) - high);
          v(i, d) = -config.restitution * v(i, d);
        }
        x(i, d) = std::clamp(x(i, d), low, high);
      }
    }
    traj.set_frame(t, x);
  }
  return traj;
}

namespace {

void initial_state(const GeneratorConfig& c, std::mt19937_64& rng, Matrix& x, Matrix& v) {
  const std::size_t n = c.particles;
  const std::size_t dim = c.dim;
  const auto side = static_cast<std::size_t>(
      std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(dim)) - 1e-9));
  const double extent = static_cast<double>(side > 0 ? side - 1 : 0) * c.lattice_spacing;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> origin(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const auto [low, high] = c.bounds[d];
    const double margin = 0.5 * c.lattice_spacing;
    const double free = (high - low) - extent - 2.0 * margin;
    // blocks wider than the box are centred and squeezed by the walls
    origin[d] = free > 0.0 ? low + margin + unit(rng) * free : low + 0.5 * ((high - low) - extent);
  }

  x = Matrix(n, dim);
  v = Matrix(n, dim);
  const double jitter = c.lattice_jitter * c.lattice_spacing;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (std::size_t d = 0; d < dim; ++d) {
      const auto [low, high] = c.bounds[d];
      const double cell = static_cast<double>(rest % side);
      rest /= side;
      const double offset = jitter * (2.0 * unit(rng) - 1.0);
      x(i, d) = std::clamp(origin[d] + cell * c.lattice_spacing + offset, low, high);
    }
  }

  // common velocity: random direction, magnitude uniform in [0, initial_speed]
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> dir(dim);
  double norm = 0.0;
  for (double& d : dir) {
    d = normal(rng);
    norm += d * d;
  }
  norm = std::sqrt(norm);
  const double speed = c.initial_speed * unit(rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) v(i, d) = norm > 0.0 ? speed * dir[d] / norm : 0.0;
  }
}

}  // namespace

std::pair<TrajectorySet, Metadata> generate_reference(const GeneratorConfig& config,
                                                      std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  TrajectorySet set;
  for (std::size_t k = 0; k < config.trajectories; ++k) {
    Matrix x, v;
    initial_state(config, rng, x, v);
    set.trajectories.push_back(simulate(config, x, v));
  }

  Metadata meta;
  meta.bounds = config.bounds;
  meta.sequence_length = config.steps;
  meta.default_connectivity_radius = config.connectivity_radius;
  meta.dim = config.dim;
  meta.dt = config.dt;
  meta.stats = config.steps >= 3 ? compute_statistics(set)
                                 : NormalizationStats{std::vector<double>(config.dim, 0.0),
                                                      std::vector<double>(config.dim, 1.0),
                                                      std::vector<double>(config.dim, 0.0),
                                                      std::vector<double>(config.dim, 1.0)};
  return {std::move(set), std::move(meta)};
}

}  // namespace gns
