#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gns/core/model.hpp"
#include "gns/dataset/metadata.hpp"

namespace gns {

/// Semi-implicit Euler in finite-difference units:
///   a = a_norm * acc_std + acc_mean
///   v_{t+1} = (x_t - x_{t-1}) + a
///   x_{t+1} = x_t + v_{t+1}
Matrix euler_update(const Matrix& x_t, const Matrix& x_prev, const Matrix& a_norm,
                    const Metadata& meta);

/// Clamps every coordinate into the metadata box.
void clamp_to_bounds(Matrix& positions, const Metadata& meta);

/// Normalized accelerations for the particles of the latest history frame.
/// `step` counts from 0 for the first predicted frame.
using AccelerationModel = std::function<Matrix(std::span<const Matrix> history, std::size_t step)>;

/// Autoregressive rollout: `initial` holds the seed frames, the result holds
/// those frames followed by `steps` predicted frames, each clamped to the
/// metadata box. Throws RolloutError with the step index when the model or
/// the integrator produces a non-finite value. `steps` may be 0.
std::vector<Matrix> rollout(std::span<const Matrix> initial, const AccelerationModel& model,
                            const Metadata& meta, std::size_t steps);

/// Rollout that rebuilds the radius graph and features from the latest
/// `input_sequence_length` frames before every prediction.
std::vector<Matrix> rollout(std::span<const Matrix> initial, std::span<const std::int64_t> types,
                            const ModelParams& params, const Metadata& meta, std::size_t steps,
                            const GraphOptions& options = {});

}  // namespace gns
