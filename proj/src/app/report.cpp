#include "gns/app/report.hpp"

#include <cmath>

#include "gns/errors.hpp"

namespace gns {

double position_mse(const Matrix& predicted, const Matrix& truth) {
  require_same_shape(predicted, truth, "position_mse");
  if (predicted.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted.data()[i] - truth.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted.size());
}

RolloutReportBuilder::RolloutReportBuilder(std::size_t seed_frames, std::size_t steps)
    : seed_frames_(seed_frames), sums_(steps, 0.0) {
  report_.steps = steps;
}

void RolloutReportBuilder::add(std::span<const Matrix> predicted, std::span<const Matrix> truth,
                               bool within_bounds) {
  const std::size_t k = sums_.size();
  if (predicted.size() != seed_frames_ + k || truth.size() < seed_frames_ + k) {
    throw ContractError("rollout report: frame counts do not cover the requested steps");
  }
  for (std::size_t s = 0; s < k; ++s) {
    const Matrix& p = predicted[seed_frames_ + s];
    const double e = position_mse(p, truth[seed_frames_ + s]);
    sums_[s] += e;
    for (double v : p.values()) report_.finite = report_.finite && std::isfinite(v);
  }
  report_.within_bounds = report_.within_bounds && within_bounds;
  ++report_.trajectories;
}

RolloutReport RolloutReportBuilder::finish(double seconds) const {
  RolloutReport r = report_;
  r.per_step_mse = sums_;
  if (r.trajectories > 0) {
    for (double& e : r.per_step_mse) e /= static_cast<double>(r.trajectories);
  }
  if (!r.per_step_mse.empty()) r.final_step_mse = r.per_step_mse.back();
  r.seconds = seconds;
  const double frames = static_cast<double>(r.steps * r.trajectories);
  r.steps_per_second = seconds > 0.0 ? frames / seconds : 0.0;
  return r;
}

nlohmann::json to_json(const RolloutReport& r) {
  nlohmann::json j = {{"steps", r.steps},
                      {"trajectories", r.trajectories},
                      {"per_step_mse", r.per_step_mse},
                      {"final_step_mse", nullptr},
                      {"seconds", r.seconds},
                      {"steps_per_second", r.steps_per_second},
                      {"finite", r.finite},
                      {"within_bounds", r.within_bounds}};
  if (r.final_step_mse) j["final_step_mse"] = *r.final_step_mse;
  return j;
}

}  // namespace gns
