// AVX-512F variant (x86-64). Compiled with -mavx512f.
#include <immintrin.h>

#include "gemm_driver.hpp"
#include "variants.hpp"

namespace pshield::kernels::detail {
namespace {

// 8 x 16 tile: 16 zmm accumulators.
struct Avx512Micro {
  static constexpr std::size_t MR = 8;
  static constexpr std::size_t NR = 16;

  static void run(std::size_t kc, const double* a, const double* b, double* c,
                  std::size_t ldc) {
    __m512d acc[MR][2];
#pragma GCC unroll 8
    for (std::size_t r = 0; r < MR; ++r) {
      acc[r][0] = _mm512_setzero_pd();
      acc[r][1] = _mm512_setzero_pd();
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const __m512d b0 = _mm512_loadu_pd(b + p * NR);
      const __m512d b1 = _mm512_loadu_pd(b + p * NR + 8);
#pragma GCC unroll 8
      for (std::size_t r = 0; r < MR; ++r) {
        const __m512d av = _mm512_set1_pd(a[p * MR + r]);
        acc[r][0] = _mm512_fmadd_pd(av, b0, acc[r][0]);
        acc[r][1] = _mm512_fmadd_pd(av, b1, acc[r][1]);
      }
    }
#pragma GCC unroll 8
    for (std::size_t r = 0; r < MR; ++r) {
      double* row = c + r * ldc;
      _mm512_storeu_pd(row, _mm512_add_pd(_mm512_loadu_pd(row), acc[r][0]));
      _mm512_storeu_pd(row + 8, _mm512_add_pd(_mm512_loadu_pd(row + 8), acc[r][1]));
    }
  }
};

}  // namespace

void gemm_avx512(const GemmShape& s, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double beta, double* c, std::size_t ldc, double* ws) {
  gemm_blocked<Avx512Micro>(s, a, lda, b, ldb, beta, c, ldc, ws);
}

double dot_avx512(const double* a, const double* b, std::size_t n) {
  __m512d s0 = _mm512_setzero_pd();
  __m512d s1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), s0);
    s1 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 8), _mm512_loadu_pd(b + i + 8), s1);
  }
  double sum = _mm512_reduce_add_pd(_mm512_add_pd(s0, s1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx512(double alpha, const double* x, double* y, std::size_t n) {
  const __m512d av = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(av, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace pshield::kernels::detail
