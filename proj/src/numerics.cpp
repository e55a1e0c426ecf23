#include "fdce/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "fdce/kernels.hpp"

namespace fdce {

namespace {

using EMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using EVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

Eigen::Map<const EMat> as_eigen(const ComplexMat& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

ComplexMat from_eigen(const EMat& e) {
  ComplexMat out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  std::copy(e.data(), e.data() + e.size(), out.data().begin());
  return out;
}

std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    fail(ErrorKind::InvalidDimension, "dimension product overflows");
  }
  return a * b;
}

}  // namespace

void validate(const Shape2D& shape) {
  if (shape.n_rx == 0 || shape.n_tx == 0) {
    fail(ErrorKind::InvalidDimension, "shape must have n_rx >= 1 and n_tx >= 1");
  }
}

// ---------------------------------------------------------------------------
// ComplexMat

ComplexMat::ComplexMat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(checked_mul(rows, cols)) {}

ComplexMat ComplexMat::identity(std::size_t n) {
  ComplexMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMat ComplexMat::adjoint() const {
  ComplexMat out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = std::conj((*this)(i, j));
  return out;
}

ComplexMat ComplexMat::transpose() const {
  ComplexMat out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

ComplexVec ComplexMat::apply(std::span<const cplx> x) const {
  if (x.size() != cols_) fail(ErrorKind::InvalidDimension, "matrix-vector length mismatch");
  ComplexVec y(rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    if (x[j] != cplx{}) kernels::axpy(x[j], col(j), y);
  }
  return y;
}

ComplexVec ComplexMat::apply_adjoint(std::span<const cplx> x) const {
  if (x.size() != rows_) fail(ErrorKind::InvalidDimension, "adjoint matrix-vector length mismatch");
  ComplexVec y(cols_);
  for (std::size_t j = 0; j < cols_; ++j) y[j] = kernels::dot_conj(col(j), x);
  return y;
}

ComplexMat operator*(const ComplexMat& a, const ComplexMat& b) {
  if (a.cols_ != b.rows_) fail(ErrorKind::InvalidDimension, "matrix product dimension mismatch");
  ComplexMat c(a.rows_, b.cols_);
  for (std::size_t j = 0; j < b.cols_; ++j) {
    auto out = c.col(j);
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const cplx s = b(k, j);
      if (s != cplx{}) kernels::axpy(s, a.col(k), out);
    }
  }
  return c;
}

ComplexMat operator+(const ComplexMat& a, const ComplexMat& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) fail(ErrorKind::InvalidDimension, "matrix sum dimension mismatch");
  ComplexMat c = a;
  for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] += b.data_[i];
  return c;
}

ComplexMat operator-(const ComplexMat& a, const ComplexMat& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) fail(ErrorKind::InvalidDimension, "matrix difference dimension mismatch");
  ComplexMat c = a;
  for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
  return c;
}

ComplexMat operator*(cplx s, const ComplexMat& a) {
  ComplexMat c = a;
  for (auto& v : c.data_) v *= s;
  return c;
}

double max_abs_diff(const ComplexMat& a, const ComplexMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::InvalidDimension, "max_abs_diff dimension mismatch");
  return max_abs_diff(a.data(), b.data());
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidDimension, "max_abs_diff length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidDimension, "max_abs_diff length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const cplx> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](const cplx& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

ComplexMat unitary_dft(std::size_t n) {
  if (n == 0) fail(ErrorKind::InvalidDimension, "DFT size must be >= 1");
  ComplexMat f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      // reduce j*k mod n first so the angle stays accurate for large n
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      f(j, k) = std::polar(scale, ang);
    }
  }
  return f;
}

ComplexMat kron(const ComplexMat& a, const ComplexMat& b) {
  const std::size_t rows = checked_mul(a.rows(), b.rows());
  const std::size_t cols = checked_mul(a.cols(), b.cols());
  ComplexMat out(rows, cols);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const cplx s = a(i, j);
      for (std::size_t l = 0; l < b.cols(); ++l)
        for (std::size_t k = 0; k < b.rows(); ++k) out(i * b.rows() + k, j * b.cols() + l) = s * b(k, l);
    }
  return out;
}

ComplexVec vec(const ComplexMat& h) { return {h.data().begin(), h.data().end()}; }

ComplexMat unvec(std::span<const cplx> h, const Shape2D& shape) {
  validate(shape);
  if (h.size() != shape.size()) fail(ErrorKind::InvalidDimension, "unvec length does not match shape");
  ComplexMat m(shape.n_rx, shape.n_tx);
  std::copy(h.begin(), h.end(), m.data().begin());
  return m;
}

// ---------------------------------------------------------------------------
// FFT

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
  if (n == 0) fail(ErrorKind::InvalidDimension, "FFT size must be >= 1");
  if (pow2_) {
    const int bits = std::countr_zero(n);
    bitrev_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
      bitrev_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    return;
  }
  const std::size_t m = std::bit_ceil(2 * n - 1);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k2 = (k * k) % (2 * n);
    chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
  }
  inner_.emplace_back(m);
  chirp_filter_.assign(m, cplx{});
  chirp_filter_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_filter_[k] = std::conj(chirp_[k]);
    chirp_filter_[m - k] = std::conj(chirp_[k]);
  }
  inner_.front().forward(chirp_filter_);
}

void FftPlan::forward(std::span<cplx> x) const {
  if (x.size() != n_) fail(ErrorKind::InvalidDimension, "FFT input length mismatch");
  if (n_ == 1) return;
  if (pow2_) radix2(x, false);
  else bluestein(x, false);
}

void FftPlan::inverse(std::span<cplx> x) const {
  if (x.size() != n_) fail(ErrorKind::InvalidDimension, "FFT input length mismatch");
  if (n_ == 1) return;
  if (pow2_) radix2(x, true);
  else bluestein(x, true);
}

void FftPlan::radix2(std::span<cplx> x, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cplx w = inverse ? std::conj(twiddle_[j * step]) : twiddle_[j * step];
        const cplx u = x[start + j];
        const cplx v = x[start + j + half] * w;
        x[start + j] = u + v;
        x[start + j + half] = u - v;
      }
    }
  }
}

void FftPlan::bluestein(std::span<cplx> x, bool inverse) const {
  // inverse(x) = conj(forward(conj(x)))
  if (inverse) {
    for (auto& v : x) v = std::conj(v);
  }
  const FftPlan& inner = inner_.front();
  const std::size_t m = inner.size();
  std::vector<cplx> a(m);
  kernels::cmul(std::span<const cplx>(x.data(), n_), chirp_, std::span<cplx>(a.data(), n_));
  inner.forward(a);
  kernels::cmul(a, chirp_filter_, a);
  inner.inverse(a);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n_; ++k) x[k] = a[k] * chirp_[k] * scale;
  if (inverse) {
    for (auto& v : x) v = std::conj(v);
  }
}

Dft2Plan::Dft2Plan(const Shape2D& shape) : shape_(shape), rx_((validate(shape), shape.n_rx)), tx_(shape.n_tx) {}

void Dft2Plan::transform(std::span<cplx> x, bool inverse) const {
  if (x.size() != shape_.size()) fail(ErrorKind::InvalidDimension, "2D DFT input length does not match shape");
  const std::size_t nr = shape_.n_rx, nt = shape_.n_tx;
  if (nr > 1) {
    for (std::size_t t = 0; t < nt; ++t) {
      auto column = x.subspan(t * nr, nr);
      inverse ? rx_.inverse(column) : rx_.forward(column);
    }
  }
  if (nt > 1) {
    std::vector<cplx> row(nt);
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t t = 0; t < nt; ++t) row[t] = x[t * nr + r];
      inverse ? tx_.inverse(row) : tx_.forward(row);
      for (std::size_t t = 0; t < nt; ++t) x[t * nr + r] = row[t];
    }
  }
}

void Dft2Plan::forward_unnormalized(std::span<cplx> x) const { transform(x, false); }
void Dft2Plan::inverse_unnormalized(std::span<cplx> x) const { transform(x, true); }

void Dft2Plan::apply(std::span<cplx> x, Direction dir) const {
  transform(x, dir == Direction::Adjoint);
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape_.size()));
  for (auto& v : x) v *= scale;
}

ComplexVec Dft2Plan::apply(std::span<const cplx> x, Direction dir) const {
  ComplexVec out(x.begin(), x.end());
  apply(std::span<cplx>(out), dir);
  return out;
}

ComplexVec dft2_apply(std::span<const cplx> x, const Shape2D& shape, Direction dir) {
  return Dft2Plan(shape).apply(x, dir);
}

ComplexVec CircConv2::spectrum(std::span<const double> x) const {
  if (x.size() != shape().size()) fail(ErrorKind::InvalidDimension, "convolution input length does not match shape");
  ComplexVec s(x.begin(), x.end());
  plan_.forward_unnormalized(s);
  return s;
}

RealVec CircConv2::real_inverse(ComplexVec& spec) const {
  plan_.inverse_unnormalized(spec);
  const double scale = 1.0 / static_cast<double>(shape().size());
  RealVec out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real() * scale;
  return out;
}

RealVec CircConv2::convolve(std::span<const cplx> kernel_spectrum, std::span<const double> x) const {
  ComplexVec s = spectrum(x);
  kernels::cmul(kernel_spectrum, s, s);
  return real_inverse(s);
}

RealVec CircConv2::correlate(std::span<const cplx> b_spectrum, std::span<const double> a) const {
  ComplexVec s = spectrum(a);
  kernels::cmul_conj(s, b_spectrum, s);
  return real_inverse(s);
}

RealVec CircConv2::convolve(std::span<const double> kernel, std::span<const double> x) const {
  return convolve(spectrum(kernel), x);
}

RealVec circ_conv2(std::span<const double> kernel, std::span<const double> x, const Shape2D& shape) {
  validate(shape);
  if (kernel.size() != shape.size() || x.size() != shape.size()) {
    fail(ErrorKind::InvalidDimension, "circ_conv2 operands must both have n_rx*n_tx entries");
  }
  return CircConv2(shape).convolve(kernel, x);
}

RealVec circular_reverse(std::span<const double> x, const Shape2D& shape) {
  if (x.size() != shape.size()) fail(ErrorKind::InvalidDimension, "circular_reverse length mismatch");
  RealVec out(x.size());
  const std::size_t nr = shape.n_rx, nt = shape.n_tx;
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t r = 0; r < nr; ++r) out[((nt - t) % nt) * nr + (nr - r) % nr] = x[t * nr + r];
  return out;
}

RealVec circular_shift(std::span<const double> x, const Shape2D& shape, std::size_t dr, std::size_t dt) {
  if (x.size() != shape.size()) fail(ErrorKind::InvalidDimension, "circular_shift length mismatch");
  RealVec out(x.size());
  const std::size_t nr = shape.n_rx, nt = shape.n_tx;
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t r = 0; r < nr; ++r) out[((t + dt) % nt) * nr + (r + dr) % nr] = x[t * nr + r];
  return out;
}

RealVec softmax(std::span<const double> v) {
  RealVec out(v.size());
  if (v.empty()) return out;
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (auto& o : out) o /= sum;
  return out;
}

ComplexVec pinv_solve(const ComplexMat& a, std::span<const cplx> y) {
  if (a.rows() != y.size()) fail(ErrorKind::InvalidDimension, "pinv_solve: rows(a) != len(y)");
  if (a.cols() == 0) return {};
  Eigen::CompleteOrthogonalDecomposition<EMat> cod(as_eigen(a));
  const EVec sol = cod.solve(Eigen::Map<const EVec>(y.data(), static_cast<Eigen::Index>(y.size())));
  return {sol.data(), sol.data() + sol.size()};
}

ComplexMat hermitian_solve(const ComplexMat& m, const ComplexMat& b) {
  if (m.rows() != m.cols() || m.rows() != b.rows()) fail(ErrorKind::InvalidDimension, "hermitian_solve dimension mismatch");
  Eigen::LLT<EMat> llt(as_eigen(m));
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NumericalConditioning, "matrix is not Hermitian positive definite");
  }
  EMat x = llt.solve(as_eigen(b));
  ComplexMat out = from_eigen(x);
  if (!all_finite(out.data())) fail(ErrorKind::NumericalConditioning, "Hermitian solve produced non-finite values");
  return out;
}

double hermitian_logdet(const ComplexMat& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidDimension, "logdet of non-square matrix");
  Eigen::LLT<EMat> llt(as_eigen(m));
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::NumericalConditioning, "matrix is not Hermitian positive definite");
  }
  const EMat& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i).real());
  return 2.0 * s;
}

RealVec hermitian_eigenvalues(const ComplexMat& m) {
  if (m.rows() != m.cols()) fail(ErrorKind::InvalidDimension, "eigenvalues of non-square matrix");
  Eigen::SelfAdjointEigenSolver<EMat> es(as_eigen(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace fdce
