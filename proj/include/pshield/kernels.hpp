// Dense numeric kernels with a scalar reference and SIMD variants.
//
// Every variant computes the same contraction; only the instruction set and
// therefore the floating-point rounding differ. The variant is selected once
// per process from CPUID (x86) or the build target (aarch64), and can be
// forced with the PSHIELD_ISA environment variable (scalar|avx2|avx512|neon).
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pshield::kernels {

enum class Isa { scalar, avx2, avx512, neon };

std::string_view isa_name(Isa isa);

// Row-major GEMM: C[m x n] = op(A)[m x k] * op(B)[k x n] + beta * C.
// op(A) = A when !trans_a (A is m x k, stride lda), A^T otherwise (A is
// k x m). Same convention for B. beta must be 0 or 1; with beta == 0 the
// prior contents of C are ignored (NaN in C does not propagate).
struct GemmShape {
  bool trans_a = false;
  bool trans_b = false;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
};

using GemmFn = void (*)(const GemmShape& shape, const double* a, std::size_t lda,
                        const double* b, std::size_t ldb, double beta, double* c,
                        std::size_t ldc, double* workspace);
using DotFn = double (*)(const double* a, const double* b, std::size_t n);
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);

struct KernelTable {
  Isa isa;
  GemmFn gemm;
  DotFn dot;
  AxpyFn axpy;
};

// Doubles of scratch space a GemmFn needs.
std::size_t gemm_workspace_size();

// Variants compiled into this binary AND supported by the running CPU.
std::vector<Isa> available_isas();

// nullptr when the variant is not available.
const KernelTable* table_for(Isa isa);

// The process-wide selection.
const KernelTable& active();

// Convenience wrappers over active(); gemm manages a thread-local workspace.
void gemm(const GemmShape& shape, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc);
void gemm_with(const KernelTable& table, const GemmShape& shape, const double* a,
               std::size_t lda, const double* b, std::size_t ldb, double beta,
               double* c, std::size_t ldc);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace pshield::kernels
