#pragma once

#include <cstddef>

#include "gns/core/model.hpp"
#include "gns/dataset/metadata.hpp"
#include "gns/dataset/trajectory.hpp"

namespace gns {

struct OneStepEvaluation {
  double mse = 0.0;       // mean over windows of the normalized-acceleration MSE
  double baseline = 0.0;  // same for the all-zero prediction
  std::size_t windows = 0;

  double ratio() const { return baseline > 0.0 ? mse / baseline : 0.0; }
};

/// One-step evaluation without noise. `max_windows` > 0 keeps every k-th
/// window so that at most that many are used.
OneStepEvaluation evaluate_one_step(const ModelParams& params, const TrajectorySet& data,
                                    const Metadata& meta, std::size_t max_windows = 0,
                                    const GraphOptions& options = {});

}  // namespace gns
