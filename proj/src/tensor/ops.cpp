#include "gns/tensor/ops.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "eigen_view.hpp"
#include "row_kernel.hpp"
#include "gns/errors.hpp"

namespace gns {

using detail::view;

namespace {

Tape& common_tape(std::span<const Var> vars, const char* where) {
  if (vars.empty() || !vars[0].valid()) throw ContractError(std::string(where) + ": no operands");
  Tape& tape = vars[0].tape();
  for (const Var& v : vars) {
    if (!v.valid() || &v.tape() != &tape) {
      throw ContractError(std::string(where) + ": operands recorded on different tapes");
    }
  }
  return tape;
}

void check_indices(std::span<const std::size_t> indices, std::size_t bound, const char* where) {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= bound) {
      throw IndexError(std::string(where) + ": index " + std::to_string(indices[k]) +
                       " at position " + std::to_string(k) + " is out of range for " +
                       std::to_string(bound) + " rows");
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const std::array ops{a, b};
  Tape& tape = common_tape(ops, "matmul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + av.shape_string() + " * " + bv.shape_string());
  }
  Matrix out(av.rows(), bv.cols());
  detail::row_gemm(av.data(), av.rows(), av.cols(), bv.data(), bv.cols(), out.data());
  return tape.record(std::move(out), ops, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) view(t.grad_buffer(a)).noalias() += view(g) * view(b.value()).transpose();
    if (t.requires_grad(b)) view(t.grad_buffer(b)).noalias() += view(a.value()).transpose() * view(g);
  });
}

Var linear(Var x, Var weight, Var bias) {
  const std::array ops{x, weight, bias};
  Tape& tape = common_tape(ops, "linear");
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  const Matrix& bv = bias.value();
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw ShapeError("linear: input " + xv.shape_string() + ", weight " + wv.shape_string() +
                     ", bias " + bv.shape_string());
  }
  Matrix out(xv.rows(), wv.cols());
  detail::row_gemm(xv.data(), xv.rows(), xv.cols(), wv.data(), wv.cols(), out.data());
  view(out).rowwise() += view(bv).row(0);
  return tape.record(std::move(out), ops, [x, weight, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) {
      view(t.grad_buffer(x)).noalias() += view(g) * view(weight.value()).transpose();
    }
    if (t.requires_grad(weight)) {
      view(t.grad_buffer(weight)).noalias() += view(x.value()).transpose() * view(g);
    }
    if (t.requires_grad(bias)) view(t.grad_buffer(bias)).row(0) += view(g).colwise().sum();
  });
}

Var add(Var a, Var b) {
  const std::array ops{a, b};
  Tape& tape = common_tape(ops, "add");
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out += b.value();
  return tape.record(std::move(out), ops, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.grad_buffer(a) += g;
    if (t.requires_grad(b)) t.grad_buffer(b) += g;
  });
}

Var sub(Var a, Var b) {
  const std::array ops{a, b};
  Tape& tape = common_tape(ops, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out(a.rows(), a.cols());
  view(out) = view(a.value()) - view(b.value());
  return tape.record(std::move(out), ops, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.grad_buffer(a) += g;
    if (t.requires_grad(b)) view(t.grad_buffer(b)) -= view(g);
  });
}

Var scale(Var x, double factor) {
  const std::array ops{x};
  Tape& tape = common_tape(ops, "scale");
  Matrix out = x.value();
  out *= factor;
  return tape.record(std::move(out), ops, [x, factor](Tape& t, const Matrix& g) {
    view(t.grad_buffer(x)) += factor * view(g);
  });
}

Var relu(Var x) {
  const std::array ops{x};
  Tape& tape = common_tape(ops, "relu");
  Matrix out(x.rows(), x.cols());
  view(out) = view(x.value()).cwiseMax(0.0);
  return tape.record(std::move(out), ops, [x](Tape& t, const Matrix& g) {
    const Matrix& xv = x.value();
    Matrix& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv.data()[i] > 0.0) gx.data()[i] += g.data()[i];
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const std::array ops{x, gain, bias};
  Tape& tape = common_tape(ops, "layer_norm");
  const Matrix& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw ShapeError("layer_norm: input " + xv.shape_string() + ", gain " +
                     gain.value().shape_string() + ", bias " + bias.value().shape_string());
  }
  if (d == 0) throw ShapeError("layer_norm: zero-width input");

  // normalized values and per-row inverse std are kept for the adjoint
  Matrix normalized(n, d);
  std::vector<double> inv_std(n);
  Matrix out(n, d);
  const Matrix& gv = gain.value();
  const Matrix& bv = bias.value();
  for (std::size_t r = 0; r < n; ++r) {
    auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (row[c] - mean) * is;
      normalized(r, c) = xh;
      out(r, c) = xh * gv(0, c) + bv(0, c);
    }
  }
  return tape.record(
      std::move(out), ops,
      [x, gain, bias, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          Tape& t, const Matrix& g) {
        const std::size_t rows = normalized.rows();
        const std::size_t cols = normalized.cols();
        const Matrix& gv = gain.value();
        if (t.requires_grad(gain) || t.requires_grad(bias)) {
          Matrix& gg = t.grad_buffer(gain);
          Matrix& gb = t.grad_buffer(bias);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              gg(0, c) += g(r, c) * normalized(r, c);
              gb(0, c) += g(r, c);
            }
          }
        }
        if (!t.requires_grad(x)) return;
        Matrix& gx = t.grad_buffer(x);
        const double inv_d = 1.0 / static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          // dx = inv_std * (dxh - mean(dxh) - xh * mean(dxh * xh))
          double mean_dxh = 0.0;
          double mean_dxh_xh = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double dxh = g(r, c) * gv(0, c);
            mean_dxh += dxh;
            mean_dxh_xh += dxh * normalized(r, c);
          }
          mean_dxh *= inv_d;
          mean_dxh_xh *= inv_d;
          for (std::size_t c = 0; c < cols; ++c) {
            const double dxh = g(r, c) * gv(0, c);
            gx(r, c) += inv_std[r] * (dxh - mean_dxh - normalized(r, c) * mean_dxh_xh);
          }
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  Tape& tape = common_tape(parts, "concat_cols");
  const std::size_t n = parts[0].rows();
  std::size_t width = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) {
      throw ShapeError("concat_cols: row counts " + std::to_string(n) + " and " +
                       std::to_string(p.rows()));
    }
    width += p.cols();
  }
  Matrix out(n, width);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    view(out).middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(pv.cols())) =
        view(pv);
    offset += pv.cols();
  }
  std::vector<Var> captured(parts.begin(), parts.end());
  return tape.record(std::move(out), parts, [captured](Tape& t, const Matrix& g) {
    std::size_t off = 0;
    for (const Var& p : captured) {
      const auto w = static_cast<Eigen::Index>(p.cols());
      if (t.requires_grad(p)) {
        view(t.grad_buffer(p)) += view(g).middleCols(static_cast<Eigen::Index>(off), w);
      }
      off += p.cols();
    }
  });
}

Var tile_rows(Var row, std::size_t rows) {
  const std::array ops{row};
  Tape& tape = common_tape(ops, "tile_rows");
  const Matrix& rv = row.value();
  if (rv.rows() != 1) throw ShapeError("tile_rows: expected 1 row, got " + rv.shape_string());
  Matrix out(rows, rv.cols());
  view(out).rowwise() = view(rv).row(0);
  return tape.record(std::move(out), ops, [row](Tape& t, const Matrix& g) {
    view(t.grad_buffer(row)).row(0) += view(g).colwise().sum();
  });
}

Var gather_rows(Var values, std::span<const std::size_t> indices) {
  const std::array ops{values};
  Tape& tape = common_tape(ops, "gather_rows");
  const Matrix& v = values.value();
  check_indices(indices, v.rows(), "gather_rows");
  const std::size_t d = v.cols();
  Matrix out(indices.size(), d);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double* src = v.data() + indices[k] * d;
    std::copy(src, src + d, out.data() + k * d);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return tape.record(std::move(out), ops, [values, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix& gv = t.grad_buffer(values);
    const std::size_t width = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double* dst = gv.data() + idx[k] * width;
      const double* src = g.data() + k * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  });
}

Var scatter_sum(Var values, std::span<const std::size_t> receivers, std::size_t n_out) {
  const std::array ops{values};
  Tape& tape = common_tape(ops, "scatter_sum");
  const Matrix& v = values.value();
  if (receivers.size() != v.rows()) {
    throw ShapeError("scatter_sum: " + std::to_string(receivers.size()) + " receivers for " +
                     std::to_string(v.rows()) + " value rows");
  }
  check_indices(receivers, n_out, "scatter_sum");
  const std::size_t d = v.cols();
  Matrix out(n_out, d);
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    double* dst = out.data() + receivers[k] * d;
    const double* src = v.data() + k * d;
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  std::vector<std::size_t> idx(receivers.begin(), receivers.end());
  return tape.record(std::move(out), ops, [values, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix& gv = t.grad_buffer(values);
    const std::size_t width = g.cols();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* src = g.data() + idx[k] * width;
      double* dst = gv.data() + k * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  });
}

Var sum(Var x) {
  const std::array ops{x};
  Tape& tape = common_tape(ops, "sum");
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return tape.record(Matrix(1, 1, total), ops, [x](Tape& t, const Matrix& g) {
    view(t.grad_buffer(x)).array() += g(0, 0);
  });
}

Var mean_squared_error(Var prediction, Var target) {
  const std::array ops{prediction, target};
  Tape& tape = common_tape(ops, "mean_squared_error");
  const Matrix& p = prediction.value();
  const Matrix& q = target.value();
  require_same_shape(p, q, "mean_squared_error");
  if (p.size() == 0) throw ShapeError("mean_squared_error: empty operands");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p.data()[i] - q.data()[i];
    total += r * r;
  }
  const double inv_count = 1.0 / static_cast<double>(p.size());
  return tape.record(Matrix(1, 1, total * inv_count), ops,
                     [prediction, target, inv_count](Tape& t, const Matrix& g) {
                       const Matrix& pv = prediction.value();
                       const Matrix& qv = target.value();
                       const double f = 2.0 * inv_count * g(0, 0);
                       if (t.requires_grad(prediction)) {
                         Matrix& gp = t.grad_buffer(prediction);
                         for (std::size_t i = 0; i < pv.size(); ++i) {
                           gp.data()[i] += f * (pv.data()[i] - qv.data()[i]);
                         }
                       }
                       if (t.requires_grad(target)) {
                         Matrix& gq = t.grad_buffer(target);
                         for (std::size_t i = 0; i < pv.size(); ++i) {
                           gq.data()[i] -= f * (pv.data()[i] - qv.data()[i]);
                         }
                       }
                     });
}

}  // namespace gns
