#pragma once

#include "fdce/kernels.hpp"

namespace fdce::kernels {

namespace scalar {
void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n);
void cmul_conj(const cplx* a, const cplx* b, cplx* out, std::size_t n);
void scale_real(const double* w, const cplx* x, cplx* out, std::size_t n);
void abs2(const cplx* x, double s, double* out, std::size_t n);
cplx dot_conj(const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n);
double sq_dist(const cplx* a, const cplx* b, std::size_t n);
}  // namespace scalar

#if defined(FDCE_HAVE_AVX2)
namespace avx2 {
void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n);
void cmul_conj(const cplx* a, const cplx* b, cplx* out, std::size_t n);
void scale_real(const double* w, const cplx* x, cplx* out, std::size_t n);
void abs2(const cplx* x, double s, double* out, std::size_t n);
cplx dot_conj(const cplx* a, const cplx* b, std::size_t n);
void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n);
double sq_dist(const cplx* a, const cplx* b, std::size_t n);
}  // namespace avx2
#endif

}  // namespace fdce::kernels
