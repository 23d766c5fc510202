#pragma once

#include "gns/dataset/metadata.hpp"
#include "gns/dataset/trajectory.hpp"

namespace gns {

/// Smallest standard deviation reported by compute_statistics.
inline constexpr double kStdFloor = 1e-12;

/// Per-dimension mean and population standard deviation of first (velocity)
/// and second (acceleration) position differences, pooled over particles,
/// steps and trajectories. Throws ContractError for trajectories shorter
/// than three steps or an empty set.
NormalizationStats compute_statistics(const TrajectorySet& set);

}  // namespace gns
