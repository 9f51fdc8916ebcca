#pragma once

// Dense row-major helpers for the small square-ish matrices that appear in
// tensor-ring chain products. Ranks are tiny (rarely above 30), so plain
// triple loops beat any BLAS call here.

#include <cstddef>

namespace btr::smallmat {

/// C = A * B with A (m x n), B (n x p), C (m x p). C must not alias A or B.
inline void mul(const double* a, const double* b, double* c, std::size_t m,
                std::size_t n, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * p;
    for (std::size_t j = 0; j < p; ++j) crow[j] = 0.0;
    const double* arow = a + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = arow[k];
      const double* brow = b + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

/// Trace of a square matrix.
inline double trace(const double* a, std::size_t n) {
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) t += a[i * n + i];
  return t;
}

/// Scale column j of A (m x n) by w[j], in place.
inline void scale_cols(double* a, std::size_t m, std::size_t n,
                       const double* w) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] *= w[j];
}

/// C = kron(A, A) for A (m x n); C is (m*m x n*n). Used for exact second
/// moments of chain products.
inline void kron_self(const double* a, double* c, std::size_t m,
                      std::size_t n) {
  const std::size_t cn = n * n;
  for (std::size_t i1 = 0; i1 < m; ++i1)
    for (std::size_t i2 = 0; i2 < m; ++i2) {
      double* crow = c + (i1 * m + i2) * cn;
      for (std::size_t j1 = 0; j1 < n; ++j1) {
        const double v = a[i1 * n + j1];
        const double* arow = a + i2 * n;
        for (std::size_t j2 = 0; j2 < n; ++j2) crow[j1 * n + j2] = v * arow[j2];
      }
    }
}

}  // namespace btr::smallmat
