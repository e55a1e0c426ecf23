#pragma once

// Pilot matrices, noisy observations and the shared estimator context.
//
// With the channel H (n_rx x n_tx) and pilots X' (n_tx x n_p) the received
// block is Y = H X' + Z, i.e. y = X h + z with X = X'^T (x) I_{n_rx}.

#include <memory>

#include "fdce/numerics.hpp"
#include "fdce/rng.hpp"

namespace fdce {

struct PilotConfig {
  std::size_t n_tx = 8;
  std::size_t n_p = 8;
  Shape2D shape{4, 8};

  bool full() const noexcept { return n_p == n_tx; }
};

void validate(const PilotConfig& cfg);

/// Full-pilot configuration for a channel shape.
inline PilotConfig full_pilots(const Shape2D& shape) { return {shape.n_tx, shape.n_tx, shape}; }

struct Observation {
  ComplexVec y;
  double sigma2 = 1.0;
  PilotConfig pilot;
};

/// First n_p columns of the DFT matrix scaled by 1/sqrt(n_tx).
ComplexMat pilot_matrix(const PilotConfig& cfg);

/// X = X'^T (x) I_{n_rx}.
ComplexMat lift_pilot(const ComplexMat& xprime, std::size_t n_rx);

/// 10^(-snr_db / 10).
double snr_to_sigma2(double snr_db);

/// y = X h + z with z ~ CN(0, sigma2 I).
Observation observe(std::span<const cplx> h, const ComplexMat& x, double sigma2, Rng& rng,
                    const PilotConfig& pilot = {});

/// Pilot matrix plus noise level plus the FFT plans every estimator needs.
/// For full scaled-DFT pilots X and X^H are applied in O(N log N) as a
/// per-row DFT along the transmit axis; otherwise through the dense matrix.
class EstimatorContext {
 public:
  EstimatorContext(const PilotConfig& pilot, double sigma2);

  /// Same pilots and plans, different noise level.
  EstimatorContext with_sigma2(double sigma2) const;

  const PilotConfig& pilot() const noexcept { return shared_->pilot; }
  const Shape2D& shape() const noexcept { return shared_->pilot.shape; }
  const ComplexMat& x() const noexcept { return shared_->x; }
  double sigma2() const noexcept { return sigma2_; }
  /// X^H X = I within 1e-10.
  bool x_unitary() const noexcept { return shared_->x_unitary; }
  /// Square scaled-DFT pilots (the structured estimators require this).
  bool full_pilots() const noexcept { return shared_->pilot.full(); }
  std::size_t obs_len() const noexcept { return shared_->x.rows(); }

  ComplexVec apply_x(std::span<const cplx> h) const;
  ComplexVec apply_xh(std::span<const cplx> y) const;

  const Dft2Plan& dft2() const noexcept { return shared_->dft2; }

  /// Draws an observation of h through this context's pilots and noise level.
  ComplexVec observe(std::span<const cplx> h, Rng& rng) const;

 private:
  struct Shared {
    PilotConfig pilot;
    ComplexMat x;
    bool x_unitary = false;
    FftPlan tx_fft;
    Dft2Plan dft2;
  };

  EstimatorContext(std::shared_ptr<const Shared> shared, double sigma2) : shared_(std::move(shared)), sigma2_(sigma2) {}

  std::shared_ptr<const Shared> shared_;
  double sigma2_;
};

}  // namespace fdce
