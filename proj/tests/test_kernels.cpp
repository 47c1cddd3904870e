#include <doctest.h>

#include <cmath>
#include <vector>

#include "diswot/kernels.hpp"
#include "diswot/rng.hpp"

using namespace diswot;
using kernels::Isa;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

struct IsaKernels {
  Isa isa;
  void (*gemm)(const kernels::GemmArgs&);
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
};

std::vector<IsaKernels> simd_variants() {
  std::vector<IsaKernels> v;
#ifdef DISWOT_HAVE_AVX2_KERNELS
  if (kernels::isa_available(Isa::Avx2)) {
    v.push_back({Isa::Avx2, kernels::avx2::gemm, kernels::avx2::dot, kernels::avx2::axpy, kernels::avx2::sum});
  }
#endif
#ifdef DISWOT_HAVE_NEON_KERNELS
  v.push_back({Isa::Neon, kernels::neon::gemm, kernels::neon::dot, kernels::neon::axpy, kernels::neon::sum});
#endif
  return v;
}

}  // namespace

TEST_CASE("scalar gemm matches a direct triple loop") {
  Rng rng(1, 0);
  const std::size_t m = 5, n = 7, k = 3;
  const auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
  std::vector<double> c(m * n, 1.0);
  kernels::scalar::gemm({m, n, k, a.data(), k, b.data(), n, c.data(), n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 1.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
  Rng rng(2, 0);
  for (const auto& simd : simd_variants()) {
    CAPTURE(kernels::isa_name(simd.isa));
    for (std::size_t trial = 0; trial < 60; ++trial) {
      const std::size_t m = 1 + rng.below(19), n = 1 + rng.below(37), k = 1 + rng.below(29);
      const std::size_t lda = k + rng.below(3), ldb = n + rng.below(3), ldc = n + rng.below(3);
      const auto a = random_vec(m * lda, rng), b = random_vec(k * ldb, rng);
      auto c1 = random_vec(m * ldc, rng);
      auto c2 = c1;
      kernels::scalar::gemm({m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc});
      simd.gemm({m, n, k, a.data(), lda, b.data(), ldb, c2.data(), ldc});
      double worst = 0.0;
      for (std::size_t i = 0; i < c1.size(); ++i) worst = std::max(worst, std::abs(c1[i] - c2[i]));
      CHECK(worst < 1e-12);
    }
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 100u, 1031u}) {
      const auto x = random_vec(n, rng), y = random_vec(n, rng);
      CHECK(simd.dot(x.data(), y.data(), n) ==
            doctest::Approx(kernels::scalar::dot(x.data(), y.data(), n)).epsilon(1e-13));
      CHECK(simd.sum(x.data(), n) == doctest::Approx(kernels::scalar::sum(x.data(), n)).epsilon(1e-13));
      auto y1 = y, y2 = y;
      kernels::scalar::axpy(0.75, x.data(), y1.data(), n);
      simd.axpy(0.75, x.data(), y2.data(), n);
      // the SIMD path fuses the multiply-add, so allow one rounding of difference
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(0.75 * x[i]) + std::abs(y[i])));
    }
  }
}

TEST_CASE("dispatch can be forced to scalar") {
  const Isa before = kernels::active_isa();
  kernels::set_active_isa(Isa::Scalar);
  CHECK(kernels::active_isa() == Isa::Scalar);
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  CHECK(kernels::dot(x.data(), y.data(), 3) == 32.0);
  kernels::set_active_isa(before);
  CHECK(kernels::active_isa() == before);
  CHECK(kernels::isa_available(Isa::Scalar));
  if (!kernels::isa_available(Isa::Neon)) CHECK_THROWS(kernels::set_active_isa(Isa::Neon));
}
