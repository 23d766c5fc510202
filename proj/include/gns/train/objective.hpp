#pragma once

#include <random>
#include <span>
#include <vector>

#include "gns/core/model.hpp"
#include "gns/dataset/metadata.hpp"
#include "gns/dataset/windows.hpp"
#include "gns/tensor/adam.hpp"

namespace gns {

/// Mean over all entries of the squared difference. Throws ShapeError.
double loss(const Matrix& prediction, const Matrix& target);

/// Random-walk perturbation of the input positions: the first input is left
/// in place and each later one receives the running sum of independent
/// N(0, (std / sqrt(k))^2) increments, k = inputs - 1, so the last input is
/// displaced with standard deviation `std`. The target is untouched; the
/// training target acceleration is then computed from the perturbed inputs,
/// which asks the model to steer back onto the clean trajectory.
TrainingWindow inject_noise(const TrainingWindow& window, double std, std::mt19937_64& rng);

struct GradientResult {
  double loss = 0.0;
  std::vector<Matrix> gradient;  // aligned with ModelParams::tensors()
};

/// Loss and parameter gradient of one window on a private tape.
GradientResult window_gradient(const TrainingWindow& window, const ModelParams& params,
                               const Metadata& meta, const GraphOptions& options = {});

/// Batch mean of window_gradient, accumulated in batch order and scaled by
/// 1 / batch size at the end. Throws ContractError for an empty batch.
GradientResult batch_gradient(std::span<const TrainingWindow> batch, const ModelParams& params,
                              const Metadata& meta, const GraphOptions& options = {});

/// Sum of `parts` in order, then scaled by 1 / parts.size().
GradientResult average(std::span<const GradientResult> parts);

/// Adam update with `result.gradient` at the given learning rate.
void apply_gradient(ModelParams& params, AdamState& state, const GradientResult& result,
                    double learning_rate);

/// batch_gradient followed by apply_gradient. Returns the pre-update loss.
double train_step(std::span<const TrainingWindow> batch, ModelParams& params, AdamState& state,
                  const Metadata& meta, double learning_rate, const GraphOptions& options = {});

}  // namespace gns
