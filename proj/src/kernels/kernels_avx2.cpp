// AVX2 + FMA variant (x86-64). Compiled with -mavx2 -mfma.
#include <immintrin.h>

#include "gemm_driver.hpp"
#include "variants.hpp"

namespace pshield::kernels::detail {
namespace {

// 6 x 8 tile: 12 ymm accumulators, two B vectors, one broadcast.
struct Avx2Micro {
  static constexpr std::size_t MR = 6;
  static constexpr std::size_t NR = 8;

  static void run(std::size_t kc, const double* a, const double* b, double* c,
                  std::size_t ldc) {
    __m256d acc[MR][2];
#pragma GCC unroll 6
    for (std::size_t r = 0; r < MR; ++r) {
      acc[r][0] = _mm256_setzero_pd();
      acc[r][1] = _mm256_setzero_pd();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * NR);
      const __m256d b1 = _mm256_loadu_pd(b + p * NR + 4);
#pragma GCC unroll 6
      for (std::size_t r = 0; r < MR; ++r) {
        const __m256d av = _mm256_broadcast_sd(a + p * MR + r);
        acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
      }
    }
#pragma GCC unroll 6
    for (std::size_t r = 0; r < MR; ++r) {
      double* row = c + r * ldc;
      _mm256_storeu_pd(row, _mm256_add_pd(_mm256_loadu_pd(row), acc[r][0]));
      _mm256_storeu_pd(row + 4, _mm256_add_pd(_mm256_loadu_pd(row + 4), acc[r][1]));
    }
  }
};

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void gemm_avx2(const GemmShape& s, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double beta, double* c, std::size_t ldc, double* ws) {
  gemm_blocked<Avx2Micro>(s, a, lda, b, ldb, beta, c, ldc, ws);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  double sum = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace pshield::kernels::detail
