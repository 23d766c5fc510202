#pragma once

#include <cstddef>
#include <span>

#include "gns/tensor/tape.hpp"

namespace gns {

// Differentiable primitives. All operands must live on the same tape; the
// result is recorded on that tape. Shape violations throw ShapeError, index
// violations throw IndexError.

Var matmul(Var a, Var b);
/// x * weight + bias, bias is 1 x out and broadcast over rows.
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double factor);
Var relu(Var x);

/// Per-row normalization over the feature axis followed by an elementwise
/// affine map: (x - mean) / sqrt(var + eps) * gain + bias.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Column-wise concatenation; all parts need the same row count.
Var concat_cols(std::span<const Var> parts);

/// Repeats a 1 x d row `rows` times.
Var tile_rows(Var row, std::size_t rows);

/// out[k] = values[indices[k]]. Adjoint is scatter_sum.
Var gather_rows(Var values, std::span<const std::size_t> indices);

/// out[i] = sum of values[k] over k with receivers[k] == i, accumulated in
/// ascending k. Rows without incoming entries are zero. Adjoint is gather.
Var scatter_sum(Var values, std::span<const std::size_t> receivers, std::size_t n_out);

/// 1x1 sum of all entries.
Var sum(Var x);
/// 1x1 mean of squared entry-wise differences over all entries.
Var mean_squared_error(Var prediction, Var target);

}  // namespace gns
