#pragma once

// Conditional-mean channel estimation on a discrete prior grid.
//
// Each grid point i carries a covariance C_i and its linear MMSE filter W_i.
// The gridded estimator mixes the W_i y with softmax weights over
//   e_i = tr(X W_i C_hat) + b_i,  C_hat = y y^H / sigma^2,  b_i = log|I - X W_i|.
// When every C_i is diagonalized by the 2D DFT Q the same estimator becomes
// the structured form Q^H diag(A softmax(A^T c_hat + b)) Q X^H y.

#include <vector>

#include "fdce/signal_model.hpp"

namespace fdce {

struct GridLabel {
  double aoa_deg = 0.0;
  double aod_deg = 0.0;
};

struct PriorGrid {
  std::vector<ComplexMat> covs;
  RealVec weights;  // uniform 1/P
  std::vector<GridLabel> labels;

  std::size_t size() const noexcept { return covs.size(); }
};

struct GriddedFilterBank {
  std::vector<ComplexMat> w_filters;
  RealVec b;

  std::size_t size() const noexcept { return w_filters.size(); }
};

/// Columns of A are the spectral MMSE gains w_i (N x P, column-major).
struct StructuredBank {
  std::size_t n = 0;
  std::size_t p = 0;
  RealVec a_mat;
  RealVec b;

  std::span<const double> column(std::size_t i) const { return {a_mat.data() + i * n, n}; }
};

/// C X^H (X C X^H + sigma^2 I)^{-1}.
ComplexMat conditional_mmse_filter(const ComplexMat& c_delta, const EstimatorContext& ctx);

/// log|I - X W| for the MMSE filter of c_delta. Since X W = I - sigma^2 M^{-1}
/// with M = X C X^H + sigma^2 I, this equals m log sigma^2 - log det M, which
/// is real and evaluated through a Cholesky factor of M.
double mmse_log_det_offset(const ComplexMat& c_delta, const EstimatorContext& ctx);

/// Single-cluster angular-spectrum model used to populate dense grids.
struct SpectrumModel {
  double angle_spread_deg = 10.0;
  double element_spacing = 0.5;
  double sector_deg = 120.0;
  std::size_t quadrature_points = 161;
};

/// Covariance C = C_tx (x) C_rx of a Laplacian power angular spectrum around
/// (aoa, aod), normalized to trace n_rx * n_tx. Toeplitz along each axis.
ComplexMat cluster_covariance(const Shape2D& shape, const GridLabel& center, const SpectrumModel& model);

/// P covariances on a uniform (AoA, AoD) grid over the sector plus their
/// filters and log-det offsets.
std::pair<PriorGrid, GriddedFilterBank> build_grid(const Shape2D& shape, std::size_t p, const EstimatorContext& ctx,
                                                  const SpectrumModel& model = {});

GriddedFilterBank filter_bank(const PriorGrid& grid, const EstimatorContext& ctx);

/// Softmax weights over the grid for observation y.
RealVec gridded_weights(std::span<const cplx> y, const GriddedFilterBank& bank, const EstimatorContext& ctx);
ComplexVec gridded_estimate(std::span<const cplx> y, const GriddedFilterBank& bank, const EstimatorContext& ctx);

/// Spectral gains w(c_hat) = A softmax(A^T c_hat + b).
RealVec structured_gains(std::span<const double> chat, const StructuredBank& bank);
ComplexVec structured_estimate(std::span<const cplx> y, const StructuredBank& bank, const EstimatorContext& ctx);

/// c_hat = |Q X^H y|^2 / sigma^2.
RealVec compute_chat(std::span<const cplx> y, const EstimatorContext& ctx);

/// Nonnegative spectra of circulant covariances C_i = Q^H diag(c_i) Q.
struct CirculantSpectra {
  Shape2D shape;
  std::vector<RealVec> spectra;
};

/// Wrapped 2D Gaussian bumps on the DFT frequency grid, P centers spread
/// evenly over the N cells (every cell when P = N, in which case all spectra
/// are circular shifts of the first). Each spectrum has mean 1.
CirculantSpectra circulant_spectra(const Shape2D& shape, std::size_t p, double width_bins = 1.0, double floor = 1e-3);

/// Dense and structured representations of the same circulant grid estimator.
std::pair<GriddedFilterBank, StructuredBank> circulant_grid(const CirculantSpectra& spectra, const EstimatorContext& ctx);
std::pair<GriddedFilterBank, StructuredBank> circulant_grid(const Shape2D& shape, std::size_t p,
                                                           const EstimatorContext& ctx);

/// Circulant approximation of a dense grid: c_i = real diag(Q C_i Q^H).
StructuredBank structured_from_grid(const PriorGrid& grid, const EstimatorContext& ctx);

}  // namespace fdce
