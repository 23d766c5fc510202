#include "gns/tensor/adam.hpp"

#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

AdamState AdamState::for_params(std::span<const Matrix* const> params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (const Matrix* p : params) {
    s.first_moment.push_back(Matrix::zeros_like(*p));
    s.second_moment.push_back(Matrix::zeros_like(*p));
  }
  return s;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " moments");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "adam_step gradient");
    require_same_shape(*params[i], state.first_moment[i], "adam_step first moment");
    require_same_shape(*params[i], state.second_moment[i], "adam_step second moment");
  }

  const AdamHyper& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i].data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

}  // namespace gns
