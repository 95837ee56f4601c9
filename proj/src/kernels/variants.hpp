// Per-ISA entry points; each is defined in its own translation unit.
#pragma once

#include "pshield/kernels.hpp"

namespace pshield::kernels::detail {

void gemm_scalar(const GemmShape&, const double*, std::size_t, const double*, std::size_t,
                 double, double*, std::size_t, double*);
double dot_scalar(const double*, const double*, std::size_t);
void axpy_scalar(double, const double*, double*, std::size_t);

#if defined(PSHIELD_HAVE_AVX2)
void gemm_avx2(const GemmShape&, const double*, std::size_t, const double*, std::size_t,
               double, double*, std::size_t, double*);
double dot_avx2(const double*, const double*, std::size_t);
void axpy_avx2(double, const double*, double*, std::size_t);
#endif

#if defined(PSHIELD_HAVE_AVX512)
void gemm_avx512(const GemmShape&, const double*, std::size_t, const double*, std::size_t,
                 double, double*, std::size_t, double*);
double dot_avx512(const double*, const double*, std::size_t);
void axpy_avx512(double, const double*, double*, std::size_t);
#endif

#if defined(PSHIELD_HAVE_NEON)
void gemm_neon(const GemmShape&, const double*, std::size_t, const double*, std::size_t,
               double, double*, std::size_t, double*);
double dot_neon(const double*, const double*, std::size_t);
void axpy_neon(double, const double*, double*, std::size_t);
#endif

}  // namespace pshield::kernels::detail
