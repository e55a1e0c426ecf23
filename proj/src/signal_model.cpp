#include "fdce/signal_model.hpp"

#include <cmath>
#include <numbers>

#include "fdce/kernels.hpp"

namespace fdce {

void validate(const PilotConfig& cfg) {
  validate(cfg.shape);
  if (cfg.n_tx != cfg.shape.n_tx) fail(ErrorKind::InvalidDimension, "pilot n_tx does not match channel shape");
  if (cfg.n_p < 1 || cfg.n_p > cfg.n_tx) fail(ErrorKind::InvalidDimension, "pilot count must satisfy 1 <= n_p <= n_tx");
}

ComplexMat pilot_matrix(const PilotConfig& cfg) {
  if (cfg.n_tx == 0 || cfg.n_p == 0 || cfg.n_p > cfg.n_tx) {
    fail(ErrorKind::InvalidDimension, "pilot count must satisfy 1 <= n_p <= n_tx");
  }
  const ComplexMat f = unitary_dft(cfg.n_tx);  // F / sqrt(n_tx)
  ComplexMat xp(cfg.n_tx, cfg.n_p);
  for (std::size_t p = 0; p < cfg.n_p; ++p)
    for (std::size_t t = 0; t < cfg.n_tx; ++t) xp(t, p) = f(t, p);
  return xp;
}

ComplexMat lift_pilot(const ComplexMat& xprime, std::size_t n_rx) {
  return kron(xprime.transpose(), ComplexMat::identity(n_rx));
}

double snr_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

Observation observe(std::span<const cplx> h, const ComplexMat& x, double sigma2, Rng& rng, const PilotConfig& pilot) {
  if (h.size() != x.cols()) fail(ErrorKind::InvalidDimension, "observe: len(h) != cols(X)");
  if (!(sigma2 >= 0.0)) fail(ErrorKind::InvalidDimension, "observe: noise variance must be nonnegative");
  Observation obs;
  obs.y = x.apply(h);
  obs.sigma2 = sigma2;
  obs.pilot = pilot;
  if (sigma2 > 0.0) {
    for (auto& v : obs.y) v += rng.complex_normal(sigma2);
  }
  return obs;
}

EstimatorContext::EstimatorContext(const PilotConfig& pilot, double sigma2) : sigma2_(sigma2) {
  validate(pilot);
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) fail(ErrorKind::InvalidDimension, "noise variance must be finite and nonnegative");
  const ComplexMat x = lift_pilot(pilot_matrix(pilot), pilot.shape.n_rx);
  const ComplexMat gram = x.adjoint() * x;
  const bool unitary = max_abs_diff(gram, ComplexMat::identity(gram.rows())) < 1e-10;
  shared_ = std::make_shared<const Shared>(Shared{pilot, x, unitary, FftPlan(pilot.n_tx), Dft2Plan(pilot.shape)});
}

EstimatorContext EstimatorContext::with_sigma2(double sigma2) const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) fail(ErrorKind::InvalidDimension, "noise variance must be finite and nonnegative");
  return {shared_, sigma2};
}

ComplexVec EstimatorContext::apply_x(std::span<const cplx> h) const {
  const Shape2D& s = shape();
  if (h.size() != s.size()) fail(ErrorKind::InvalidDimension, "apply_x: length mismatch");
  if (!full_pilots()) return shared_->x.apply(h);
  // Y = H X': each row of H goes through a unitary forward DFT along tx.
  ComplexVec y(h.begin(), h.end());
  ComplexVec row(s.n_tx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.n_tx));
  for (std::size_t r = 0; r < s.n_rx; ++r) {
    for (std::size_t t = 0; t < s.n_tx; ++t) row[t] = y[t * s.n_rx + r];
    shared_->tx_fft.forward(row);
    for (std::size_t t = 0; t < s.n_tx; ++t) y[t * s.n_rx + r] = row[t] * scale;
  }
  return y;
}

ComplexVec EstimatorContext::apply_xh(std::span<const cplx> y) const {
  const Shape2D& s = shape();
  if (y.size() != obs_len()) fail(ErrorKind::InvalidDimension, "apply_xh: length mismatch");
  if (!full_pilots()) return shared_->x.apply_adjoint(y);
  ComplexVec h(y.begin(), y.end());
  ComplexVec row(s.n_tx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.n_tx));
  for (std::size_t r = 0; r < s.n_rx; ++r) {
    for (std::size_t t = 0; t < s.n_tx; ++t) row[t] = h[t * s.n_rx + r];
    shared_->tx_fft.inverse(row);
    for (std::size_t t = 0; t < s.n_tx; ++t) h[t * s.n_rx + r] = row[t] * scale;
  }
  return h;
}

ComplexVec EstimatorContext::observe(std::span<const cplx> h, Rng& rng) const {
  ComplexVec y = apply_x(h);
  for (auto& v : y) v += rng.complex_normal(sigma2_);
  return y;
}

}  // namespace fdce
