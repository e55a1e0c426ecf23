#pragma once

// Reference channel estimators: least squares, LMMSE with a global sample
// covariance, ML-estimated structured covariance, and (genie-aided) OMP over
// an oversampled-DFT Kronecker dictionary.

#include <vector>

#include "fdce/signal_model.hpp"

namespace fdce {

/// Minimum-norm least squares. Uses X^H y directly when X^H X = I.
ComplexVec ls_estimate(std::span<const cplx> y, const EstimatorContext& ctx);

/// W = C X^H (X C X^H + sigma^2 I)^{-1}, via a Hermitian solve.
ComplexMat linear_mmse_filter(const ComplexMat& c, const EstimatorContext& ctx);

/// Precomputed LMMSE filter for a fixed (covariance, noise level).
class LmmseEstimator {
 public:
  LmmseEstimator(const ComplexMat& c_glob, const EstimatorContext& ctx);

  ComplexVec operator()(std::span<const cplx> y) const { return w_.apply(y); }
  const ComplexMat& filter() const noexcept { return w_; }

 private:
  ComplexMat w_;
};

ComplexVec lmmse_global(std::span<const cplx> y, const ComplexMat& c_glob, const EstimatorContext& ctx);

/// Per-coordinate gains max(s - sigma^2, 0) / (max(s - sigma^2, 0) + sigma^2)
/// with s = |Q X^H y|^2.
RealVec ml_structured_gains(std::span<const cplx> y, const EstimatorContext& ctx);
ComplexVec ml_structured(std::span<const cplx> y, const EstimatorContext& ctx);

struct OmpDictionary {
  ComplexMat d;  // n_rx*n_tx x (g_rx*g_tx), D = D_tx (x) D_rx
  std::size_t oversampling_rx = 1;
  std::size_t oversampling_tx = 1;
};

/// Oversampled DFT dictionary; column g of a factor is
/// exp(+j 2 pi k g / G) / sqrt(n), G = oversampling * n.
ComplexMat oversampled_dft(std::size_t n, std::size_t oversampling);
OmpDictionary build_dictionary(const Shape2D& shape, std::size_t oversampling_rx, std::size_t oversampling_tx);

struct OmpResult {
  std::vector<std::size_t> support;
  ComplexVec coefficients;  // aligned with support
  double residual_norm = 0.0;

  /// Dense coefficient vector of length n.
  ComplexVec dense(std::size_t n) const;
};

/// Orthogonal matching pursuit with a least-squares refit on the active set.
/// Returns the result after each iteration (index k-1 holds k atoms). Stops
/// early if the residual vanishes or no new atom is linearly independent.
std::vector<OmpResult> omp_path(const ComplexMat& a, std::span<const cplx> y, std::size_t k);
OmpResult omp(const ComplexMat& a, std::span<const cplx> y, std::size_t k);

/// OMP on the effective dictionary X D with the sparsity picked by the true
/// channel: returns the D t_k, k = 1..k_max, closest to h_true.
class GenieOmp {
 public:
  GenieOmp(const EstimatorContext& ctx, OmpDictionary dict);

  struct Result {
    ComplexVec h_hat;
    std::size_t best_k = 0;
    RealVec errors;  // ||h_true - D t_k||^2 for k = 1..len
  };

  Result run(std::span<const cplx> y, std::span<const cplx> h_true, std::size_t k_max) const;

  const OmpDictionary& dictionary() const noexcept { return dict_; }
  const ComplexMat& effective() const noexcept { return xd_; }

 private:
  OmpDictionary dict_;
  ComplexMat xd_;
};

ComplexVec genie_omp_estimate(std::span<const cplx> y, const EstimatorContext& ctx, const OmpDictionary& dict,
                              std::span<const cplx> h_true, std::size_t k_max);

}  // namespace fdce
