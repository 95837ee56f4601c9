// Portable reference variant. Also the fallback on CPUs without AVX2/NEON.
#include "gemm_driver.hpp"
#include "variants.hpp"

namespace pshield::kernels::detail {
namespace {

struct ScalarMicro {
  static constexpr std::size_t MR = 4;
  static constexpr std::size_t NR = 4;

  static void run(std::size_t kc, const double* a, const double* b, double* c,
                  std::size_t ldc) {
    double acc[MR][NR] = {};
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < MR; ++r) {
        const double av = a[p * MR + r];
        for (std::size_t q = 0; q < NR; ++q) acc[r][q] += av * b[p * NR + q];
      }
    }
    for (std::size_t r = 0; r < MR; ++r) {
      for (std::size_t q = 0; q < NR; ++q) c[r * ldc + q] += acc[r][q];
    }
  }
};

}  // namespace

void gemm_scalar(const GemmShape& s, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double beta, double* c, std::size_t ldc, double* ws) {
  gemm_blocked<ScalarMicro>(s, a, lda, b, ldb, beta, c, ldc, ws);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace pshield::kernels::detail
