#pragma once

#include <cmath>

#include "fdce/numerics.hpp"
#include "fdce/rng.hpp"

namespace fdce::test {

inline ComplexVec random_vec(std::size_t n, Rng& rng) {
  ComplexVec v(n);
  for (auto& e : v) e = rng.complex_normal();
  return v;
}

inline RealVec random_real(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  RealVec v(n);
  for (auto& e : v) e = rng.uniform(lo, hi);
  return v;
}

inline ComplexMat random_mat(std::size_t r, std::size_t c, Rng& rng) {
  ComplexMat m(r, c);
  for (auto& e : m.data()) e = rng.complex_normal();
  return m;
}

// Dense unnormalized DFT straight from the definition.
inline ComplexMat dft_matrix(std::size_t n, double sign = -1.0) {
  ComplexMat f(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      f(j, k) = std::polar(1.0, sign * 2.0 * M_PI * static_cast<double>(j * k % n) / static_cast<double>(n));
  return f;
}

// Q = F_tx (x) F_rx with unitary factors, built entry by entry.
inline ComplexMat dense_q(const Shape2D& s) {
  const std::size_t n = s.size();
  ComplexMat q(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t r1 = 0; r1 < s.n_rx; ++r1)
    for (std::size_t t1 = 0; t1 < s.n_tx; ++t1)
      for (std::size_t r2 = 0; r2 < s.n_rx; ++r2)
        for (std::size_t t2 = 0; t2 < s.n_tx; ++t2) {
          const double ph = -2.0 * M_PI *
                            (static_cast<double>(r1 * r2) / static_cast<double>(s.n_rx) +
                             static_cast<double>(t1 * t2) / static_cast<double>(s.n_tx));
          q(t1 * s.n_rx + r1, t2 * s.n_rx + r2) = scale * std::polar(1.0, ph);
        }
  return q;
}

// Direct O(N^2) circular convolution on a column-major grid.
inline RealVec direct_conv(const RealVec& k, const RealVec& x, const Shape2D& s) {
  RealVec out(s.size(), 0.0);
  for (std::size_t r = 0; r < s.n_rx; ++r)
    for (std::size_t t = 0; t < s.n_tx; ++t)
      for (std::size_t r2 = 0; r2 < s.n_rx; ++r2)
        for (std::size_t t2 = 0; t2 < s.n_tx; ++t2) {
          const std::size_t kr = (r + s.n_rx - r2) % s.n_rx, kt = (t + s.n_tx - t2) % s.n_tx;
          out[t * s.n_rx + r] += k[kt * s.n_rx + kr] * x[t2 * s.n_rx + r2];
        }
  return out;
}

// Gauss-Jordan inverse with partial pivoting; small dense oracle only.
inline ComplexMat dense_inverse(ComplexMat a) {
  const std::size_t n = a.rows();
  ComplexMat inv = ComplexMat::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const cplx d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const cplx f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// Random Hermitian positive-definite matrix B B^H + eps I.
inline ComplexMat random_psd(std::size_t n, Rng& rng, double eps = 0.1) {
  const ComplexMat b = random_mat(n, n, rng);
  ComplexMat c = b * b.adjoint();
  for (std::size_t i = 0; i < n; ++i) c(i, i) += eps;
  return c;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace fdce::test
