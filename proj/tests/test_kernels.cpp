#include <cmath>
#include <vector>

#include "doctest.h"
#include "pshield/kernels.hpp"
#include "pshield/random.hpp"

using namespace pshield;
using kernels::GemmShape;

namespace {

// Direct triple loop over op(A) and op(B).
void naive_gemm(const GemmShape& s, const std::vector<double>& a, std::size_t lda,
                const std::vector<double>& b, std::size_t ldb, double beta, std::vector<double>& c,
                std::size_t ldc) {
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = s.trans_a ? a[p * lda + i] : a[i * lda + p];
        const double bv = s.trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = acc + (beta == 0.0 ? 0.0 : c[i * ldc + j]);
    }
  }
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("every available gemm variant matches the naive loop") {
  Rng rng(11);
  const std::size_t sizes[] = {1, 2, 3, 5, 7, 8, 13, 17, 31, 64, 97, 130, 300};
  for (auto isa : kernels::available_isas()) {
    CAPTURE(kernels::isa_name(isa));
    const auto& table = *kernels::table_for(isa);
    for (int trial = 0; trial < 60; ++trial) {
      GemmShape s{rng.bernoulli(0.5), rng.bernoulli(0.5), sizes[rng.below(13)],
                  sizes[rng.below(13)], sizes[rng.below(13)]};
      if (trial % 10 == 0) s.k = 300 + rng.below(300);  // crosses the k blocking
      const std::size_t lda = (s.trans_a ? s.m : s.k) + rng.below(3);
      const std::size_t ldb = (s.trans_b ? s.k : s.n) + rng.below(3);
      const std::size_t ldc = s.n + rng.below(3);
      auto a = random_vec((s.trans_a ? s.k : s.m) * lda, rng);
      auto b = random_vec((s.trans_b ? s.n : s.k) * ldb, rng);
      auto c0 = random_vec(s.m * ldc, rng);
      const double beta = trial % 2 == 0 ? 0.0 : 1.0;
      auto expect = c0;
      auto got = c0;
      if (beta == 0.0) {
        for (double& x : got) x = std::nan("");  // must not leak through beta = 0
        for (std::size_t i = 0; i < s.m; ++i) {
          for (std::size_t j = s.n; j < ldc; ++j) got[i * ldc + j] = c0[i * ldc + j];
        }
      }
      naive_gemm(s, a, lda, b, ldb, beta, expect, ldc);
      kernels::gemm_with(table, s, a.data(), lda, b.data(), ldb, beta, got.data(), ldc);
      for (std::size_t i = 0; i < expect.size(); ++i) {
        REQUIRE(got[i] == doctest::Approx(expect[i]).epsilon(1e-12).scale(static_cast<double>(s.k)));
      }
    }
  }
}

TEST_CASE("dot and axpy variants agree with the scalar reference") {
  Rng rng(5);
  for (auto isa : kernels::available_isas()) {
    CAPTURE(kernels::isa_name(isa));
    const auto& t = *kernels::table_for(isa);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 1000u}) {
      auto x = random_vec(n, rng);
      auto y = random_vec(n, rng);
      double ref = 0.0;
      for (std::size_t i = 0; i < n; ++i) ref += x[i] * y[i];
      CHECK(t.dot(x.data(), y.data(), n) == doctest::Approx(ref).epsilon(1e-12));
      auto z = y;
      t.axpy(0.75, x.data(), z.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == doctest::Approx(y[i] + 0.75 * x[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("scalar variant is always available and listed first") {
  const auto isas = kernels::available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == kernels::Isa::scalar);
  CHECK(kernels::table_for(kernels::Isa::scalar) != nullptr);
}
