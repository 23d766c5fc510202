#include "gns/dataset/trajectory.hpp"

#include <cstring>
#include <string>

#include "gns/errors.hpp"

namespace gns {

Trajectory::Trajectory(std::size_t steps_, std::size_t particles_, std::size_t dim_)
    : steps(steps_),
      particles(particles_),
      dim(dim_),
      positions(steps_ * particles_ * dim_, 0.0),
      types(particles_, 0) {}

Matrix Trajectory::frame(std::size_t t) const {
  if (t >= steps) {
    throw IndexError("Trajectory::frame: step " + std::to_string(t) + " of " + std::to_string(steps));
  }
  const auto first = positions.begin() + static_cast<std::ptrdiff_t>(t * particles * dim);
  return Matrix(particles, dim, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(particles * dim)));
}

void Trajectory::set_frame(std::size_t t, const Matrix& frame) {
  if (t >= steps || frame.rows() != particles || frame.cols() != dim) {
    throw ShapeError("Trajectory::set_frame: frame " + frame.shape_string() + " at step " +
                     std::to_string(t));
  }
  std::memcpy(positions.data() + t * particles * dim, frame.data(), frame.size() * sizeof(double));
}

void Trajectory::validate() const {
  if (positions.size() != steps * particles * dim) {
    throw ContractError("trajectory: " + std::to_string(positions.size()) +
                        " position values do not match shape (" + std::to_string(steps) + ", " +
                        std::to_string(particles) + ", " + std::to_string(dim) + ")");
  }
  if (types.size() != particles) {
    throw ContractError("trajectory: " + std::to_string(types.size()) + " particle types for " +
                        std::to_string(particles) + " particles");
  }
  for (std::int64_t t : types) {
    if (t < 0) throw ContractError("trajectory: negative particle type " + std::to_string(t));
  }
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t fingerprint(const TrajectorySet& set) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t count = set.size();
  mix(h, &count, sizeof count);
  for (const Trajectory& t : set.trajectories) {
    const std::uint64_t shape[3] = {t.steps, t.particles, t.dim};
    mix(h, shape, sizeof shape);
    mix(h, t.positions.data(), t.positions.size() * sizeof(double));
    mix(h, t.types.data(), t.types.size() * sizeof(std::int64_t));
  }
  return h;
}

}  // namespace gns
