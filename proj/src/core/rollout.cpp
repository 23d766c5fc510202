#include "gns/core/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

Matrix euler_update(const Matrix& x_t, const Matrix& x_prev, const Matrix& a_norm,
                    const Metadata& meta) {
  require_same_shape(x_t, x_prev, "euler_update");
  require_same_shape(x_t, a_norm, "euler_update");
  if (x_t.cols() != meta.dim) {
    throw ShapeError("euler_update: positions are " + x_t.shape_string() + " but metadata dim is " +
                     std::to_string(meta.dim));
  }
  Matrix next(x_t.rows(), x_t.cols());
  for (std::size_t p = 0; p < x_t.rows(); ++p) {
    for (std::size_t d = 0; d < x_t.cols(); ++d) {
      const double a = a_norm(p, d) * meta.stats.acc_std[d] + meta.stats.acc_mean[d];
      const double v = (x_t(p, d) - x_prev(p, d)) + a;
      next(p, d) = x_t(p, d) + v;
    }
  }
  return next;
}

void clamp_to_bounds(Matrix& positions, const Metadata& meta) {
  for (std::size_t p = 0; p < positions.rows(); ++p) {
    for (std::size_t d = 0; d < positions.cols(); ++d) {
      const auto [low, high] = meta.bounds[d];
      positions(p, d) = std::clamp(positions(p, d), low, high);
    }
  }
}

namespace {

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<Matrix> rollout(std::span<const Matrix> initial, const AccelerationModel& model,
                            const Metadata& meta, std::size_t steps) {
  if (initial.size() < 2) throw ContractError("rollout: need at least two initial frames");
  std::vector<Matrix> frames(initial.begin(), initial.end());
  const std::size_t history = initial.size();
  frames.reserve(history + steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::span<const Matrix> window(frames.data() + frames.size() - history, history);
    const Matrix a = model(window, k);
    if (!all_finite(a)) {
      throw RolloutError("rollout: non-finite acceleration at step " + std::to_string(k), k);
    }
    Matrix next = euler_update(frames.back(), frames[frames.size() - 2], a, meta);
    if (!all_finite(next)) {
      throw RolloutError("rollout: non-finite position at step " + std::to_string(k), k);
    }
    clamp_to_bounds(next, meta);
    frames.push_back(std::move(next));
  }
  return frames;
}

std::vector<Matrix> rollout(std::span<const Matrix> initial, std::span<const std::int64_t> types,
                            const ModelParams& params, const Metadata& meta, std::size_t steps,
                            const GraphOptions& options) {
  if (initial.size() != params.config.input_sequence_length) {
    throw ContractError("rollout: " + std::to_string(initial.size()) + " initial frames, model takes " +
                        std::to_string(params.config.input_sequence_length));
  }
  const AccelerationModel model = [&](std::span<const Matrix> history, std::size_t) {
    return predict_value(build_graph(history, types, meta, options), params);
  };
  return rollout(initial, model, meta, steps);
}

}  // namespace gns
