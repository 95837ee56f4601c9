#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gemm_driver.hpp"
#include "pshield/kernels.hpp"
#include "variants.hpp"

namespace pshield::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar, detail::gemm_scalar, detail::dot_scalar,
                              detail::axpy_scalar};
#if defined(PSHIELD_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, detail::gemm_avx2, detail::dot_avx2, detail::axpy_avx2};
#endif
#if defined(PSHIELD_HAVE_AVX512)
constexpr KernelTable kAvx512{Isa::avx512, detail::gemm_avx512, detail::dot_avx512,
                              detail::axpy_avx512};
#endif
#if defined(PSHIELD_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon, detail::gemm_neon, detail::dot_neon, detail::axpy_neon};
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
#if defined(PSHIELD_HAVE_AVX2)
    case Isa::avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
#if defined(PSHIELD_HAVE_AVX512)
    case Isa::avx512:
      return __builtin_cpu_supports("avx512f");
#endif
#if defined(PSHIELD_HAVE_NEON)
    case Isa::neon:
      return true;
#endif
    default:
      return false;
  }
}

const KernelTable* compiled_table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
#if defined(PSHIELD_HAVE_AVX2)
    case Isa::avx2:
      return &kAvx2;
#endif
#if defined(PSHIELD_HAVE_AVX512)
    case Isa::avx512:
      return &kAvx512;
#endif
#if defined(PSHIELD_HAVE_NEON)
    case Isa::neon:
      return &kNeon;
#endif
    default:
      return nullptr;
  }
}

const KernelTable& select_table() {
  if (const char* forced = std::getenv("PSHIELD_ISA"); forced != nullptr && *forced != '\0') {
    const std::string want(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512, Isa::neon}) {
      if (want == isa_name(isa)) {
        if (const KernelTable* t = table_for(isa)) return *t;
        throw std::runtime_error("PSHIELD_ISA=" + want + " is not available on this CPU/build");
      }
    }
    throw std::runtime_error("unknown PSHIELD_ISA value: " + want);
  }
  for (Isa isa : {Isa::avx512, Isa::avx2, Isa::neon}) {
    if (const KernelTable* t = table_for(isa)) return *t;
  }
  return kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::avx512:
      return "avx512";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

std::size_t gemm_workspace_size() { return kMc * kKc + kKc * kNc + kTileMax; }

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512, Isa::neon}) {
    if (table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable* table_for(Isa isa) {
  const KernelTable* t = compiled_table(isa);
  return (t != nullptr && cpu_supports(isa)) ? t : nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

void gemm_with(const KernelTable& table, const GemmShape& shape, const double* a,
               std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
               std::size_t ldc) {
  thread_local std::vector<double> workspace(gemm_workspace_size());
  table.gemm(shape, a, lda, b, ldb, beta, c, ldc, workspace.data());
}

void gemm(const GemmShape& shape, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  gemm_with(active(), shape, a, lda, b, ldb, beta, c, ldc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace pshield::kernels
