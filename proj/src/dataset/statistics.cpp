#include "gns/dataset/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

namespace {

// Two-pass accumulation keeps the variance free of catastrophic cancellation
// when the mean dominates (e.g. gravity in acceleration).
template <typename Sample>
void moments(const TrajectorySet& set, std::size_t dim, std::size_t lag, Sample sample,
             std::vector<double>& mean, std::vector<double>& stddev) {
  mean.assign(dim, 0.0);
  stddev.assign(dim, 0.0);
  double count = 0.0;
  for (const Trajectory& tr : set.trajectories) {
    for (std::size_t t = lag; t < tr.steps; ++t) {
      for (std::size_t p = 0; p < tr.particles; ++p) {
        for (std::size_t d = 0; d < dim; ++d) mean[d] += sample(tr, t, p, d);
      }
    }
    count += static_cast<double>((tr.steps - lag) * tr.particles);
  }
  for (double& m : mean) m /= count;
  for (const Trajectory& tr : set.trajectories) {
    for (std::size_t t = lag; t < tr.steps; ++t) {
      for (std::size_t p = 0; p < tr.particles; ++p) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double r = sample(tr, t, p, d) - mean[d];
          stddev[d] += r * r;
        }
      }
    }
  }
  for (double& s : stddev) s = std::max(std::sqrt(s / count), kStdFloor);
}

}  // namespace

NormalizationStats compute_statistics(const TrajectorySet& set) {
  if (set.size() == 0) throw ContractError("compute_statistics: empty trajectory set");
  const std::size_t dim = set[0].dim;
  std::size_t particles = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (set[k].steps < 3) {
      throw ContractError("compute_statistics: trajectory " + std::to_string(k) + " has " +
                          std::to_string(set[k].steps) + " steps, needs at least 3");
    }
    if (set[k].dim != dim) throw ContractError("compute_statistics: mixed dimensionality");
    particles += set[k].particles;
  }
  if (particles == 0) throw ContractError("compute_statistics: no particles");

  NormalizationStats s;
  moments(
      set, dim, 1,
      [](const Trajectory& tr, std::size_t t, std::size_t p, std::size_t d) {
        return tr.at(t, p, d) - tr.at(t - 1, p, d);
      },
      s.vel_mean, s.vel_std);
  moments(
      set, dim, 2,
      [](const Trajectory& tr, std::size_t t, std::size_t p, std::size_t d) {
        return tr.at(t, p, d) - 2.0 * tr.at(t - 1, p, d) + tr.at(t - 2, p, d);
      },
      s.acc_mean, s.acc_std);
  return s;
}

}  // namespace gns
