// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "diswot/kernels.hpp"

namespace diswot::kernels::avx2 {

namespace {

constexpr std::size_t kNr = 8;  // columns per packed B panel (two ymm)
constexpr std::size_t kMr = 4;  // rows per micro-tile

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// c[r][0..ncols) += sum_p a[r][p] * panel[p][0..8), ncols <= 8.
template <std::size_t Rows>
void micro_tile(const double* a, std::size_t lda, const double* panel, std::size_t k, double* c,
                std::size_t ldc, std::size_t ncols) {
  alignas(32) double edge[Rows][kNr];
  __m256d acc[Rows][2];
  for (std::size_t r = 0; r < Rows; ++r) {
    if (ncols == kNr) {
      acc[r][0] = _mm256_loadu_pd(c + r * ldc);
      acc[r][1] = _mm256_loadu_pd(c + r * ldc + 4);
    } else {
      std::fill(edge[r], edge[r] + kNr, 0.0);
      std::copy(c + r * ldc, c + r * ldc + ncols, edge[r]);
      acc[r][0] = _mm256_load_pd(edge[r]);
      acc[r][1] = _mm256_load_pd(edge[r] + 4);
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_load_pd(panel + p * kNr);
    const __m256d b1 = _mm256_load_pd(panel + p * kNr + 4);
    for (std::size_t r = 0; r < Rows; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * lda + p);
      acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    if (ncols == kNr) {
      _mm256_storeu_pd(c + r * ldc, acc[r][0]);
      _mm256_storeu_pd(c + r * ldc + 4, acc[r][1]);
    } else {
      _mm256_store_pd(edge[r], acc[r][0]);
      _mm256_store_pd(edge[r] + 4, acc[r][1]);
      std::copy(edge[r], edge[r] + ncols, c + r * ldc);
    }
  }
}

}  // namespace

void gemm(const GemmArgs& g) {
  if (g.m == 0 || g.n == 0 || g.k == 0) return;
  thread_local std::vector<double> panel_storage;
  panel_storage.resize(g.k * kNr + 4);
  // 32-byte align the panel inside the buffer.
  double* panel = panel_storage.data();
  while (reinterpret_cast<std::uintptr_t>(panel) % 32 != 0) ++panel;

  for (std::size_t j0 = 0; j0 < g.n; j0 += kNr) {
    const std::size_t ncols = std::min(kNr, g.n - j0);
    for (std::size_t p = 0; p < g.k; ++p) {
      const double* src = g.b + p * g.ldb + j0;
      double* dst = panel + p * kNr;
      std::size_t j = 0;
      for (; j < ncols; ++j) dst[j] = src[j];
      for (; j < kNr; ++j) dst[j] = 0.0;
    }
    std::size_t i = 0;
    for (; i + kMr <= g.m; i += kMr) {
      micro_tile<4>(g.a + i * g.lda, g.lda, panel, g.k, g.c + i * g.ldc + j0, g.ldc, ncols);
    }
    switch (g.m - i) {
      case 3:
        micro_tile<3>(g.a + i * g.lda, g.lda, panel, g.k, g.c + i * g.ldc + j0, g.ldc, ncols);
        break;
      case 2:
        micro_tile<2>(g.a + i * g.lda, g.lda, panel, g.k, g.c + i * g.ldc + j0, g.ldc, ncols);
        break;
      case 1:
        micro_tile<1>(g.a + i * g.lda, g.lda, panel, g.k, g.c + i * g.ldc + j0, g.ldc, ncols);
        break;
      default:
        break;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_squares(const double* x, std::size_t n) { return dot(x, x, n); }

}  // namespace diswot::kernels::avx2
