#include "gns/train/evaluate.hpp"

#include "gns/dataset/windows.hpp"
#include "gns/errors.hpp"
#include "gns/train/objective.hpp"

namespace gns {

OneStepEvaluation evaluate_one_step(const ModelParams& params, const TrajectorySet& data,
                                    const Metadata& meta, std::size_t max_windows,
                                    const GraphOptions& options) {
  const std::vector<WindowIndex> all = enumerate_windows(data, params.config.input_sequence_length);
  if (all.empty()) throw ContractError("evaluate_one_step: dataset has no windows");
  const std::size_t stride = max_windows > 0 && all.size() > max_windows
                                 ? (all.size() + max_windows - 1) / max_windows
                                 : 1;
  OneStepEvaluation e;
  for (std::size_t k = 0; k < all.size(); k += stride) {
    const TrainingWindow w = make_window(data, all[k], params.config.input_sequence_length);
    const Matrix target = target_acceleration(w, meta);
    const Matrix pred = predict_value(build_graph(w.inputs, w.types, meta, options), params);
    e.mse += loss(pred, target);
    e.baseline += loss(Matrix::zeros_like(target), target);
    ++e.windows;
  }
  e.mse /= static_cast<double>(e.windows);
  e.baseline /= static_cast<double>(e.windows);
  return e;
}

}  // namespace gns
