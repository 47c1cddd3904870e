#include "diswot/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "diswot/error.hpp"

namespace diswot::kernels {

namespace scalar {

void gemm(const GemmArgs& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    double* c_row = g.c + i * g.ldc;
    const double* a_row = g.a + i * g.lda;
    for (std::size_t p = 0; p < g.k; ++p) {
      const double a = a_row[p];
      const double* b_row = g.b + p * g.ldb;
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

}  // namespace scalar

namespace {

struct Table {
  Isa isa;
  void (*gemm)(const GemmArgs&);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
};

constexpr Table kScalar{Isa::Scalar, scalar::gemm, scalar::dot, scalar::axpy, scalar::sum,
                        scalar::sum_squares};
#ifdef DISWOT_HAVE_AVX2_KERNELS
constexpr Table kAvx2{Isa::Avx2, avx2::gemm, avx2::dot, avx2::axpy, avx2::sum, avx2::sum_squares};
#endif
#ifdef DISWOT_HAVE_NEON_KERNELS
constexpr Table kNeon{Isa::Neon, neon::gemm, neon::dot, neon::axpy, neon::sum, neon::sum_squares};
#endif

const Table* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &kScalar;
    case Isa::Avx2:
#ifdef DISWOT_HAVE_AVX2_KERNELS
      return &kAvx2;
#else
      return nullptr;
#endif
    case Isa::Neon:
#ifdef DISWOT_HAVE_NEON_KERNELS
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Table* initial_table() {
  if (const char* env = std::getenv("DISWOT_KERNELS")) {
    if (std::string(env) == "scalar") return &kScalar;
  }
  return table_for(detect_isa());
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(DISWOT_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#ifdef DISWOT_HAVE_NEON_KERNELS
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa active_isa() { return current().load(std::memory_order_acquire)->isa; }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw Error("kernel ISA '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
  current().store(table_for(isa), std::memory_order_release);
}

void gemm(const GemmArgs& args) { current().load(std::memory_order_acquire)->gemm(args); }
double dot(const double* x, const double* y, std::size_t n) {
  return current().load(std::memory_order_acquire)->dot(x, y, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  current().load(std::memory_order_acquire)->axpy(alpha, x, y, n);
}
double sum(const double* x, std::size_t n) {
  return current().load(std::memory_order_acquire)->sum(x, n);
}
double sum_squares(const double* x, std::size_t n) {
  return current().load(std::memory_order_acquire)->sum_squares(x, n);
}

}  // namespace diswot::kernels
