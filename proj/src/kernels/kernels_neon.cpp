// NEON variant (aarch64). Advanced SIMD is baseline there, so no extra flags.
#include <arm_neon.h>

#include "gemm_driver.hpp"
#include "variants.hpp"

namespace pshield::kernels::detail {
namespace {

// 4 x 4 tile of float64x2 pairs: 8 accumulators.
struct NeonMicro {
  static constexpr std::size_t MR = 4;
  static constexpr std::size_t NR = 4;

  static void run(std::size_t kc, const double* a, const double* b, double* c,
                  std::size_t ldc) {
    float64x2_t acc[MR][2];
    for (std::size_t r = 0; r < MR; ++r) {
      acc[r][0] = vdupq_n_f64(0.0);
      acc[r][1] = vdupq_n_f64(0.0);
    }
    for (std::size_t p = 0; p < kc; ++p) {
      const float64x2_t b0 = vld1q_f64(b + p * NR);
      const float64x2_t b1 = vld1q_f64(b + p * NR + 2);
      for (std::size_t r = 0; r < MR; ++r) {
        const float64x2_t av = vdupq_n_f64(a[p * MR + r]);
        acc[r][0] = vfmaq_f64(acc[r][0], av, b0);
        acc[r][1] = vfmaq_f64(acc[r][1], av, b1);
      }
    }
    for (std::size_t r = 0; r < MR; ++r) {
      double* row = c + r * ldc;
      vst1q_f64(row, vaddq_f64(vld1q_f64(row), acc[r][0]));
      vst1q_f64(row + 2, vaddq_f64(vld1q_f64(row + 2), acc[r][1]));
    }
  }
};

}  // namespace

void gemm_neon(const GemmShape& s, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double beta, double* c, std::size_t ldc, double* ws) {
  gemm_blocked<NeonMicro>(s, a, lda, b, ldb, beta, c, ldc, ws);
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0);
  float64x2_t s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
    s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace pshield::kernels::detail
