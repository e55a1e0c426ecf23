#pragma once

// Elementwise and reduction kernels over interleaved complex<double> buffers.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The active table is picked once at first use from
// CPUID; setting FDCE_SIMD=scalar in the environment forces the reference
// path. Both variants are checked against each other in test_kernels.

#include <complex>
#include <cstddef>
#include <span>

namespace fdce::kernels {

using cplx = std::complex<double>;

struct KernelTable {
  const char* name;
  // out[i] = a[i] * b[i]
  void (*cmul)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
  // out[i] = a[i] * conj(b[i])
  void (*cmul_conj)(const cplx* a, const cplx* b, cplx* out, std::size_t n);
  // out[i] = w[i] * x[i], w real
  void (*scale_real)(const double* w, const cplx* x, cplx* out, std::size_t n);
  // out[i] = s * |x[i]|^2
  void (*abs2)(const cplx* x, double s, double* out, std::size_t n);
  // sum conj(a[i]) * b[i]
  cplx (*dot_conj)(const cplx* a, const cplx* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
  // sum |a[i] - b[i]|^2
  double (*sq_dist)(const cplx* a, const cplx* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table() noexcept;
const KernelTable& active() noexcept;

inline void cmul(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  active().cmul(a.data(), b.data(), out.data(), out.size());
}
inline void cmul_conj(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  active().cmul_conj(a.data(), b.data(), out.data(), out.size());
}
inline void scale_real(std::span<const double> w, std::span<const cplx> x, std::span<cplx> out) {
  active().scale_real(w.data(), x.data(), out.data(), out.size());
}
inline void abs2(std::span<const cplx> x, double s, std::span<double> out) {
  active().abs2(x.data(), s, out.data(), out.size());
}
inline cplx dot_conj(std::span<const cplx> a, std::span<const cplx> b) {
  return active().dot_conj(a.data(), b.data(), a.size());
}
inline void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}
inline double sq_dist(std::span<const cplx> a, std::span<const cplx> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}
inline double sq_norm(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

}  // namespace fdce::kernels
