#pragma once

// Central finite differences over parameter matrices. Test-only oracle: it
// never touches the tape, only re-evaluates a plain scalar function.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gns/tensor/matrix.hpp"

namespace gns::testing {

inline Matrix central_difference(Matrix& param, const std::function<double()>& f,
                                 double step = 1e-6) {
  Matrix grad = Matrix::zeros_like(param);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double saved = param.data()[i];
    param.data()[i] = saved + step;
    const double up = f();
    param.data()[i] = saved - step;
    const double down = f();
    param.data()[i] = saved;
    grad.data()[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// derivative is ~0 from dominating through cancellation noise.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_relative_error(const Matrix& analytic, const Matrix& numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i], floor));
  }
  return worst;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace gns::testing
