#include "diswot/kernels.hpp"

#ifdef DISWOT_HAVE_NEON_KERNELS

#include <arm_neon.h>

namespace diswot::kernels::neon {

void gemm(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    double* c_row = g.c + i * g.ldc;
    const double* a_row = g.a + i * g.lda;
    for (std::size_t p = 0; p < g.k; ++p) {
      const double a = a_row[p];
      const double* b_row = g.b + p * g.ldb;
      std::size_t j = 0;
      for (; j + 2 <= g.n; j += 2) {
        vst1q_f64(c_row + j, vfmaq_n_f64(vld1q_f64(c_row + j), vld1q_f64(b_row + j), a));
      }
      for (; j < g.n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_n_f64(vld1q_f64(y + i), vld1q_f64(x + i), alpha));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) a0 = vaddq_f64(a0, vld1q_f64(x + i));
  double s = vaddvq_f64(a0);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_squares(const double* x, std::size_t n) { return dot(x, x, n); }

}  // namespace diswot::kernels::neon

#endif
