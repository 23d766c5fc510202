#pragma once

#include <cstddef>

namespace gns::detail {

/// c = a * b for row-major a (m x k), b (k x n), c (m x n).
///
/// Every output entry is a single fused multiply-add chain over k in
/// ascending order, started from zero. The value of a row therefore depends
/// only on that row of `a` and on `b`, never on its position in the batch,
/// which keeps the network exactly permutation-equivariant.
void row_gemm(const double* a, std::size_t m, std::size_t k, const double* b, std::size_t n,
              double* c);

}  // namespace gns::detail
