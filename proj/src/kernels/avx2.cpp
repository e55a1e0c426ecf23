// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.
//
// Layout: one __m256d holds two interleaved complex values [re0, im0, re1, im1].

#include <immintrin.h>

#include "kernel_impls.hpp"

namespace fdce::kernels::avx2 {

namespace {

inline const double* raw(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* raw(cplx* p) { return reinterpret_cast<double*>(p); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void cmul(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(raw(a + i));
    const __m256d vb = _mm256_loadu_pd(raw(b + i));
    const __m256d b_re = _mm256_movedup_pd(vb);
    const __m256d b_im = _mm256_permute_pd(vb, 0xF);
    const __m256d a_sw = _mm256_permute_pd(va, 0x5);
    _mm256_storeu_pd(raw(out + i), _mm256_fmaddsub_pd(va, b_re, _mm256_mul_pd(a_sw, b_im)));
  }
  if (i < n) scalar::cmul(a + i, b + i, out + i, n - i);
}

void cmul_conj(const cplx* a, const cplx* b, cplx* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(raw(a + i));
    const __m256d vb = _mm256_loadu_pd(raw(b + i));
    const __m256d b_re = _mm256_movedup_pd(vb);
    const __m256d b_im = _mm256_permute_pd(vb, 0xF);
    const __m256d a_sw = _mm256_permute_pd(va, 0x5);
    _mm256_storeu_pd(raw(out + i), _mm256_fmsubadd_pd(va, b_re, _mm256_mul_pd(a_sw, b_im)));
  }
  if (i < n) scalar::cmul_conj(a + i, b + i, out + i, n - i);
}

void scale_real(const double* w, const cplx* x, cplx* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d wv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0x50);
    _mm256_storeu_pd(raw(out + i), _mm256_mul_pd(wv, _mm256_loadu_pd(raw(x + i))));
  }
  if (i < n) scalar::scale_real(w + i, x + i, out + i, n - i);
}

void abs2(const cplx* x, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x0 = _mm256_loadu_pd(raw(x + i));
    const __m256d x1 = _mm256_loadu_pd(raw(x + i + 2));
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(x0, x0), _mm256_mul_pd(x1, x1));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_permute4x64_pd(h, 0xD8)));
  }
  if (i < n) scalar::abs2(x + i, s, out + i, n - i);
}

cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(raw(a + i));
    const __m256d vb = _mm256_loadu_pd(raw(b + i));
    acc_re = _mm256_fmadd_pd(va, vb, acc_re);
    acc_im = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_im);
  }
  // acc_im lanes hold [ar*bi, ai*br, ...]; imaginary part is even minus odd.
  const __m256d sign = _mm256_setr_pd(1.0, -1.0, 1.0, -1.0);
  cplx result{hsum(acc_re), hsum(_mm256_mul_pd(acc_im, sign))};
  if (i < n) result += scalar::dot_conj(a + i, b + i, n - i);
  return result;
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const __m256d pr = _mm256_set1_pd(alpha.real());
  const __m256d pi = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(raw(x + i));
    const __m256d x_sw = _mm256_permute_pd(vx, 0x5);
    const __m256d t = _mm256_fmaddsub_pd(vx, pr, _mm256_mul_pd(x_sw, pi));
    _mm256_storeu_pd(raw(y + i), _mm256_add_pd(_mm256_loadu_pd(raw(y + i)), t));
  }
  if (i < n) scalar::axpy(alpha, x + i, y + i, n - i);
}

double sq_dist(const cplx* a, const cplx* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(raw(a + i)), _mm256_loadu_pd(raw(b + i)));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  if (i < n) s += scalar::sq_dist(a + i, b + i, n - i);
  return s;
}

}  // namespace fdce::kernels::avx2
