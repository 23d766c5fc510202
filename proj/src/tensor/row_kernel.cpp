#include "row_kernel.hpp"

#include <cmath>

#if defined(__AVX512F__)
#include <immintrin.h>
#define GNS_ROW_KERNEL_AVX512 1
#elif defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define GNS_ROW_KERNEL_AVX2 1
#endif

namespace gns::detail {

namespace {

// Scalar path: used for column tails and on targets without vector FMA.
// std::fma rounds once, exactly like the vector instructions, so every path
// yields the same bits for the same row.
void scalar_block(const double* a, std::size_t rows, std::size_t k, const double* b, std::size_t n,
                  double* c, std::size_t j0) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = j0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[r * k + p], b[p * n + j], acc);
      c[r * n + j] = acc;
    }
  }
}

#if defined(GNS_ROW_KERNEL_AVX512)
constexpr std::size_t kLanes = 8;
using Vec = __m512d;
inline Vec vzero() { return _mm512_setzero_pd(); }
inline Vec vload(const double* p) { return _mm512_loadu_pd(p); }
inline void vstore(double* p, Vec v) { _mm512_storeu_pd(p, v); }
inline Vec vbroadcast(double x) { return _mm512_set1_pd(x); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm512_fmadd_pd(a, b, c); }
#elif defined(GNS_ROW_KERNEL_AVX2)
constexpr std::size_t kLanes = 4;
using Vec = __m256d;
inline Vec vzero() { return _mm256_setzero_pd(); }
inline Vec vload(const double* p) { return _mm256_loadu_pd(p); }
inline void vstore(double* p, Vec v) { _mm256_storeu_pd(p, v); }
inline Vec vbroadcast(double x) { return _mm256_set1_pd(x); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm256_fmadd_pd(a, b, c); }
#endif

#if defined(GNS_ROW_KERNEL_AVX512) || defined(GNS_ROW_KERNEL_AVX2)
constexpr std::size_t kVecs = 2;
constexpr std::size_t kTileCols = kLanes * kVecs;

template <std::size_t R>
void tile(const double* a, std::size_t k, const double* b, std::size_t n, double* c,
          std::size_t j0) {
  Vec acc[R][kVecs];
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] = vzero();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n + j0;
    Vec bv[kVecs];
    for (std::size_t v = 0; v < kVecs; ++v) bv[v] = vload(brow + v * kLanes);
    for (std::size_t r = 0; r < R; ++r) {
      const Vec x = vbroadcast(a[r * k + p]);
      for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] = vfma(x, bv[v], acc[r][v]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t v = 0; v < kVecs; ++v) vstore(c + r * n + j0 + v * kLanes, acc[r][v]);
  }
}

template <std::size_t R>
void row_block(const double* a, std::size_t k, const double* b, std::size_t n, double* c) {
  std::size_t j = 0;
  for (; j + kTileCols <= n; j += kTileCols) tile<R>(a, k, b, n, c, j);
  if (j < n) scalar_block(a, R, k, b, n, c, j);
}
#else
template <std::size_t R>
void row_block(const double* a, std::size_t k, const double* b, std::size_t n, double* c) {
  scalar_block(a, R, k, b, n, c, 0);
}
#endif

}  // namespace

void row_gemm(const double* a, std::size_t m, std::size_t k, const double* b, std::size_t n,
              double* c) {
  std::size_t i = 0;
  for (; i + 12 <= m; i += 12) row_block<12>(a + i * k, k, b, n, c + i * n);
  for (; i + 4 <= m; i += 4) row_block<4>(a + i * k, k, b, n, c + i * n);
  for (; i < m; ++i) row_block<1>(a + i * k, k, b, n, c + i * n);
}

}  // namespace gns::detail
