#include "gns/train/objective.hpp"

#include <cmath>
#include <string>

#include "gns/errors.hpp"
#include "gns/graph/features.hpp"
#include "gns/tensor/ops.hpp"

namespace gns {

double loss(const Matrix& prediction, const Matrix& target) {
  require_same_shape(prediction, target, "loss");
  if (prediction.empty()) throw ShapeError("loss: empty prediction");
  double total = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction.data()[i] - target.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(prediction.size());
}

TrainingWindow inject_noise(const TrainingWindow& window, double std, std::mt19937_64& rng) {
  if (!(std >= 0.0)) throw ContractError("inject_noise: std must be non-negative");
  TrainingWindow out = window;
  if (std == 0.0 || window.inputs.size() < 2) return out;
  const std::size_t increments = window.inputs.size() - 1;
  std::normal_distribution<double> step(0.0, std / std::sqrt(static_cast<double>(increments)));
  const Matrix& first = window.inputs.front();
  Matrix walk = Matrix::zeros_like(first);
  for (std::size_t k = 1; k <= increments; ++k) {
    for (double& w : walk.values()) w += step(rng);
    out.inputs[k] += walk;
  }
  return out;
}

GradientResult window_gradient(const TrainingWindow& window, const ModelParams& params,
                               const Metadata& meta, const GraphOptions& options) {
  const EncodedGraph g = build_graph(window.inputs, window.types, meta, options);
  const Matrix target = target_acceleration(window, meta);
  Tape tape;
  const Var l = mean_squared_error(predict(g, params, tape), tape.constant(target));
  tape.backward(l);
  GradientResult r;
  r.loss = l.value()(0, 0);
  for (const Matrix* m : params.tensors()) r.gradient.push_back(tape.gradient(*m));
  return r;
}

namespace {

void accumulate(GradientResult& into, const GradientResult& part) {
  into.loss += part.loss;
  if (into.gradient.empty()) {
    into.gradient = part.gradient;
    return;
  }
  if (into.gradient.size() != part.gradient.size()) {
    throw ShapeError("gradient sets have different lengths");
  }
  for (std::size_t i = 0; i < into.gradient.size(); ++i) into.gradient[i] += part.gradient[i];
}

void scale_by(GradientResult& r, double factor) {
  r.loss *= factor;
  for (Matrix& g : r.gradient) g *= factor;
}

}  // namespace

GradientResult batch_gradient(std::span<const TrainingWindow> batch, const ModelParams& params,
                              const Metadata& meta, const GraphOptions& options) {
  if (batch.empty()) throw ContractError("batch_gradient: empty batch");
  GradientResult total;
  for (const TrainingWindow& w : batch) accumulate(total, window_gradient(w, params, meta, options));
  scale_by(total, 1.0 / static_cast<double>(batch.size()));
  return total;
}

GradientResult average(std::span<const GradientResult> parts) {
  if (parts.empty()) throw ContractError("average: no gradients");
  GradientResult total;
  for (const GradientResult& p : parts) accumulate(total, p);
  scale_by(total, 1.0 / static_cast<double>(parts.size()));
  return total;
}

void apply_gradient(ModelParams& params, AdamState& state, const GradientResult& result,
                    double learning_rate) {
  const std::vector<Matrix*> tensors = params.tensors();
  state.hyper.learning_rate = learning_rate;
  adam_step(tensors, result.gradient, state);
}

double train_step(std::span<const TrainingWindow> batch, ModelParams& params, AdamState& state,
                  const Metadata& meta, double learning_rate, const GraphOptions& options) {
  const GradientResult r = batch_gradient(batch, params, meta, options);
  apply_gradient(params, state, r, learning_rate);
  return r.loss;
}

}  // namespace gns
