// Packed, cache-blocked GEMM driver shared by every ISA variant.
//
// Included by exactly one translation unit per ISA, each compiled with its
// own -m flags. Everything lives in an anonymous namespace and no standard
// library templates are instantiated here, so no ISA-specific code can leak
// into the rest of the program through COMDAT folding.
#pragma once

#include <cstddef>
#include <cstring>

#include "pshield/kernels.hpp"

namespace pshield::kernels {
namespace {

constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;
constexpr std::size_t kTileMax = 8 * 16;

inline std::size_t min_size(std::size_t a, std::size_t b) { return a < b ? a : b; }

// dst[panel][p][r] = op(A)(i0 + panel*MR + r, p0 + p), zero-filled past mc.
template <std::size_t MR>
void pack_a(const GemmShape& s, const double* a, std::size_t lda, std::size_t i0,
            std::size_t mc, std::size_t p0, std::size_t kc, double* dst) {
  for (std::size_t ir = 0; ir < mc; ir += MR) {
    const std::size_t rows = min_size(MR, mc - ir);
    double* panel = dst + ir * kc;
    for (std::size_t r = 0; r < MR; ++r) {
      if (r >= rows) {
        for (std::size_t p = 0; p < kc; ++p) panel[p * MR + r] = 0.0;
        continue;
      }
      const std::size_t i = i0 + ir + r;
      if (!s.trans_a) {
        const double* src = a + i * lda + p0;
        for (std::size_t p = 0; p < kc; ++p) panel[p * MR + r] = src[p];
      } else {
        const double* src = a + p0 * lda + i;
        for (std::size_t p = 0; p < kc; ++p) panel[p * MR + r] = src[p * lda];
      }
    }
  }
}

// dst[panel][p][c] = op(B)(p0 + p, j0 + panel*NR + c), zero-filled past nc.
template <std::size_t NR>
void pack_b(const GemmShape& s, const double* b, std::size_t ldb, std::size_t p0,
            std::size_t kc, std::size_t j0, std::size_t nc, double* dst) {
  for (std::size_t jr = 0; jr < nc; jr += NR) {
    const std::size_t cols = min_size(NR, nc - jr);
    double* panel = dst + jr * kc;
    if (!s.trans_b) {
      for (std::size_t p = 0; p < kc; ++p) {
        const double* src = b + (p0 + p) * ldb + j0 + jr;
        std::size_t c = 0;
        for (; c < cols; ++c) panel[p * NR + c] = src[c];
        for (; c < NR; ++c) panel[p * NR + c] = 0.0;
      }
    } else {
      for (std::size_t c = 0; c < NR; ++c) {
        if (c >= cols) {
          for (std::size_t p = 0; p < kc; ++p) panel[p * NR + c] = 0.0;
          continue;
        }
        const double* src = b + (j0 + jr + c) * ldb + p0;
        for (std::size_t p = 0; p < kc; ++p) panel[p * NR + c] = src[p];
      }
    }
  }
}

// Micro must provide MR, NR and run(kc, a_panel, b_panel, c, ldc) which
// performs C[MR x NR] += A_panel * B_panel.
template <class Micro>
void gemm_blocked(const GemmShape& s, const double* a, std::size_t lda, const double* b,
                  std::size_t ldb, double beta, double* c, std::size_t ldc,
                  double* workspace) {
  constexpr std::size_t MR = Micro::MR;
  constexpr std::size_t NR = Micro::NR;
  static_assert(MR * NR <= kTileMax);
  static_assert(kMc % MR == 0 && kNc % NR == 0);

  if (s.m == 0 || s.n == 0) return;
  if (beta == 0.0) {
    for (std::size_t i = 0; i < s.m; ++i) std::memset(c + i * ldc, 0, s.n * sizeof(double));
  }
  if (s.k == 0) return;

  double* apack = workspace;
  double* bpack = apack + kMc * kKc;
  double* tile = bpack + kKc * kNc;

  for (std::size_t jc = 0; jc < s.n; jc += kNc) {
    const std::size_t nc = min_size(kNc, s.n - jc);
    for (std::size_t pc = 0; pc < s.k; pc += kKc) {
      const std::size_t kc = min_size(kKc, s.k - pc);
      pack_b<NR>(s, b, ldb, pc, kc, jc, nc, bpack);
      for (std::size_t ic = 0; ic < s.m; ic += kMc) {
        const std::size_t mc = min_size(kMc, s.m - ic);
        pack_a<MR>(s, a, lda, ic, mc, pc, kc, apack);
        for (std::size_t jr = 0; jr < nc; jr += NR) {
          const std::size_t cols = min_size(NR, nc - jr);
          for (std::size_t ir = 0; ir < mc; ir += MR) {
            const std::size_t rows = min_size(MR, mc - ir);
            const double* ap = apack + ir * kc;
            const double* bp = bpack + jr * kc;
            double* cp = c + (ic + ir) * ldc + jc + jr;
            if (rows == MR && cols == NR) {
              Micro::run(kc, ap, bp, cp, ldc);
              continue;
            }
            for (std::size_t t = 0; t < MR * NR; ++t) tile[t] = 0.0;
            Micro::run(kc, ap, bp, tile, NR);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t q = 0; q < cols; ++q) cp[r * ldc + q] += tile[r * NR + q];
            }
          }
        }
      }
    }
  }
}

}  // namespace
}  // namespace pshield::kernels
