#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "gns/tensor/matrix.hpp"

namespace gns {

struct RolloutReport {
  std::size_t steps = 0;                 // K predicted frames per trajectory
  std::size_t trajectories = 0;
  std::vector<double> per_step_mse;      // K entries, averaged over trajectories
  std::optional<double> final_step_mse;  // empty when K = 0
  double seconds = 0.0;
  double steps_per_second = 0.0;         // predicted frames per second, all trajectories
  bool finite = true;
  bool within_bounds = true;
};

/// Mean over particles and axes of the squared position difference.
double position_mse(const Matrix& predicted, const Matrix& truth);

/// Accumulates one trajectory: `predicted` and `truth` hold the same seed
/// frames followed by the compared frames.
class RolloutReportBuilder {
 public:
  RolloutReportBuilder(std::size_t seed_frames, std::size_t steps);
  void add(std::span<const Matrix> predicted, std::span<const Matrix> truth, bool within_bounds);
  RolloutReport finish(double seconds) const;

 private:
  std::size_t seed_frames_;
  RolloutReport report_;
  std::vector<double> sums_;
};

nlohmann::json to_json(const RolloutReport& report);

}  // namespace gns
