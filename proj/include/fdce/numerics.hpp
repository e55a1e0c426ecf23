#pragma once

// Dense complex linear algebra, unitary DFTs and FFT-based 2D circular
// convolution. Everything here is double precision and column-major.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fdce/error.hpp"

namespace fdce {

using cplx = std::complex<double>;
using ComplexVec = std::vector<cplx>;
using RealVec = std::vector<double>;

/// Grid shape of a channel matrix: n_rx rows, n_tx columns.
struct Shape2D {
  std::size_t n_rx = 1;
  std::size_t n_tx = 1;

  std::size_t size() const noexcept { return n_rx * n_tx; }
  bool operator==(const Shape2D&) const = default;
};

void validate(const Shape2D& shape);

class ComplexMat {
 public:
  ComplexMat() = default;
  ComplexMat(std::size_t rows, std::size_t cols);

  static ComplexMat identity(std::size_t n);
  static ComplexMat zeros(std::size_t rows, std::size_t cols) { return ComplexMat(rows, cols); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }
  std::span<cplx> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const cplx> col(std::size_t j) const noexcept { return {data_.data() + j * rows_, rows_}; }

  ComplexMat adjoint() const;
  ComplexMat transpose() const;

  /// y = A x
  ComplexVec apply(std::span<const cplx> x) const;
  /// y = A^H x
  ComplexVec apply_adjoint(std::span<const cplx> x) const;

  friend ComplexMat operator*(const ComplexMat& a, const ComplexMat& b);
  friend ComplexMat operator+(const ComplexMat& a, const ComplexMat& b);
  friend ComplexMat operator-(const ComplexMat& a, const ComplexMat& b);
  friend ComplexMat operator*(cplx s, const ComplexMat& a);

  bool operator==(const ComplexMat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// Largest |a_ij - b_ij|; dimensions must agree.
double max_abs_diff(const ComplexMat& a, const ComplexMat& b);
double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const cplx> v) noexcept;
bool all_finite(std::span<const double> v) noexcept;

/// F / sqrt(n) with F[j,k] = exp(-2 pi i j k / n).
ComplexMat unitary_dft(std::size_t n);

ComplexMat kron(const ComplexMat& a, const ComplexMat& b);

ComplexVec vec(const ComplexMat& h);
ComplexMat unvec(std::span<const cplx> h, const Shape2D& shape);

// ---------------------------------------------------------------------------
// FFT

/// One-dimensional complex FFT of a fixed length. Powers of two use an
/// iterative radix-2 transform, every other length goes through Bluestein's
/// chirp-z algorithm on a padded power-of-two plan.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized forward transform X[k] = sum_j x[j] exp(-2 pi i j k / n), in place.
  void forward(std::span<cplx> x) const;
  /// Unnormalized inverse transform x[j] = sum_k X[k] exp(+2 pi i j k / n), in place.
  void inverse(std::span<cplx> x) const;

 private:
  void radix2(std::span<cplx> x, bool inverse) const;
  void bluestein(std::span<cplx> x, bool inverse) const;

  std::size_t n_ = 0;
  bool pow2_ = true;
  std::vector<std::size_t> bitrev_;
  std::vector<cplx> twiddle_;  // exp(-2 pi i k / n), k < n/2
  // Bluestein state
  std::vector<cplx> chirp_;          // exp(-i pi k^2 / n)
  std::vector<cplx> chirp_filter_;   // FFT of the conjugate chirp, padded
  std::vector<FftPlan> inner_;       // padded power-of-two plan (0 or 1 entries)
};

enum class Direction { Forward, Adjoint };

/// Applies Q = F_{n_tx} (x) F_{n_rx} (unitary factors) or Q^H to a
/// column-major n_rx x n_tx grid via per-axis FFTs.
class Dft2Plan {
 public:
  explicit Dft2Plan(const Shape2D& shape);

  const Shape2D& shape() const noexcept { return shape_; }

  void apply(std::span<cplx> x, Direction dir) const;
  ComplexVec apply(std::span<const cplx> x, Direction dir) const;

  /// Unnormalized forward/inverse 2D DFT (no 1/sqrt(N) scaling).
  void forward_unnormalized(std::span<cplx> x) const;
  void inverse_unnormalized(std::span<cplx> x) const;

 private:
  void transform(std::span<cplx> x, bool inverse) const;

  Shape2D shape_;
  FftPlan rx_;
  FftPlan tx_;
};

ComplexVec dft2_apply(std::span<const cplx> x, const Shape2D& shape, Direction dir);

/// 2D circular convolution on n_rx x n_tx grids (column-major), via FFT.
class CircConv2 {
 public:
  explicit CircConv2(const Shape2D& shape) : plan_(shape) {}

  const Shape2D& shape() const noexcept { return plan_.shape(); }

  /// Unnormalized 2D spectrum of a real grid.
  ComplexVec spectrum(std::span<const double> x) const;
  /// kernel * x given the kernel spectrum.
  RealVec convolve(std::span<const cplx> kernel_spectrum, std::span<const double> x) const;
  /// Circular cross-correlation r[k] = sum_n a[n] b[n - k]; the adjoint of
  /// convolution with b applied to a.
  RealVec correlate(std::span<const cplx> b_spectrum, std::span<const double> a) const;

  RealVec convolve(std::span<const double> kernel, std::span<const double> x) const;

 private:
  RealVec real_inverse(ComplexVec& spec) const;

  Dft2Plan plan_;
};

RealVec circ_conv2(std::span<const double> kernel, std::span<const double> x, const Shape2D& shape);

/// Reverse a grid in both axes circularly: out[r, t] = in[-r mod n_rx, -t mod n_tx].
RealVec circular_reverse(std::span<const double> x, const Shape2D& shape);
/// Shift a grid circularly: out[(r + dr), (t + dt)] = in[r, t].
RealVec circular_shift(std::span<const double> x, const Shape2D& shape, std::size_t dr, std::size_t dt);

RealVec softmax(std::span<const double> v);

/// Minimum-norm least-squares solution of a h = y.
ComplexVec pinv_solve(const ComplexMat& a, std::span<const cplx> y);

// ---------------------------------------------------------------------------
// Hermitian helpers backed by Eigen.

/// Solves M X = B for Hermitian positive-definite M. Throws
/// NumericalConditioning when the Cholesky factorization fails.
ComplexMat hermitian_solve(const ComplexMat& m, const ComplexMat& b);
/// log det of a Hermitian positive-definite matrix.
double hermitian_logdet(const ComplexMat& m);
/// Eigenvalues of a Hermitian matrix in ascending order.
RealVec hermitian_eigenvalues(const ComplexMat& m);

}  // namespace fdce
