#pragma once

// Data-parallel inner loops. Every routine has a scalar reference and, where
// the target supports it, an AVX2+FMA (x86-64) or NEON (AArch64) variant. The
// variant is chosen once at startup from CPU features; DISWOT_KERNELS=scalar
// forces the reference path (bit-reproducible across machines).

#include <cstddef>
#include <string_view>

namespace diswot::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

// Best ISA supported by this CPU and build.
Isa detect_isa();
// ISA currently used by the free functions below.
Isa active_isa();
// Override for tests and benchmarking. Throws if the ISA is unavailable.
void set_active_isa(Isa isa);
bool isa_available(Isa isa);

struct GemmArgs {
  std::size_t m, n, k;
  const double* a;  // m x k, row stride lda
  std::size_t lda;
  const double* b;  // k x n, row stride ldb
  std::size_t ldb;
  double* c;  // m x n, row stride ldc; accumulated into
  std::size_t ldc;
};

// C += A * B. For every output element the k-terms are summed in order.
void gemm(const GemmArgs& args);
double dot(const double* x, const double* y, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);

// Explicit per-ISA entry points, used by the equivalence tests.
namespace scalar {
void gemm(const GemmArgs& args);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DISWOT_HAVE_AVX2_KERNELS 1
namespace avx2 {
void gemm(const GemmArgs& args);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define DISWOT_HAVE_NEON_KERNELS 1
namespace neon {
void gemm(const GemmArgs& args);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace diswot::kernels
