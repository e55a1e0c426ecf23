#include "fdce/mmse_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdce/baselines.hpp"
#include "fdce/kernels.hpp"
#include "fdce/parallel.hpp"

namespace fdce {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_full_pilots(const EstimatorContext& ctx, const char* who) {
  if (!ctx.full_pilots()) fail(ErrorKind::UnsupportedConfiguration, std::string(who) + " requires square (full) pilots");
}

void require_positive_noise(const EstimatorContext& ctx, const char* who) {
  if (!(ctx.sigma2() > 0.0)) fail(ErrorKind::InvalidDimension, std::string(who) + " requires sigma^2 > 0");
}

// Toeplitz covariance of one ULA axis under a Laplacian angular spectrum.
ComplexMat axis_covariance(std::size_t n, double center_deg, const SpectrumModel& model) {
  const std::size_t q = std::max<std::size_t>(model.quadrature_points, 3);
  const double b = model.angle_spread_deg / std::numbers::sqrt2;
  const double span = 5.0 * model.angle_spread_deg;
  RealVec offsets(q), weights(q);
  double wsum = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    offsets[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(q - 1);
    weights[i] = std::exp(-std::abs(offsets[i]) / b);
    wsum += weights[i];
  }
  // First row of the Toeplitz matrix: r[d] = E[exp(j 2 pi s d sin(theta))].
  ComplexVec r(n);
  for (std::size_t i = 0; i < q; ++i) {
    const double phase = 2.0 * std::numbers::pi * model.element_spacing * std::sin((center_deg + offsets[i]) * kDeg);
    for (std::size_t d = 0; d < n; ++d) r[d] += (weights[i] / wsum) * std::polar(1.0, phase * static_cast<double>(d));
  }
  ComplexMat c(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) c(k, l) = k >= l ? r[k - l] : std::conj(r[l - k]);
  for (std::size_t k = 0; k < n; ++k) c(k, k) = 1.0;
  return c;
}

ComplexMat dense_q(const Shape2D& shape) { return kron(unitary_dft(shape.n_tx), unitary_dft(shape.n_rx)); }

struct Responses {
  ComplexVec xhy;
  std::vector<ComplexVec> wy;
  RealVec weights;
};

Responses evaluate_grid(std::span<const cplx> y, const GriddedFilterBank& bank, const EstimatorContext& ctx) {
  if (bank.size() == 0) fail(ErrorKind::DegenerateGrid, "empty filter bank");
  if (bank.b.size() != bank.size()) fail(ErrorKind::DegenerateGrid, "filter bank offsets do not match filters");
  if (y.size() != ctx.obs_len()) fail(ErrorKind::InvalidDimension, "gridded estimate: observation length mismatch");
  require_positive_noise(ctx, "gridded_estimate");
  Responses r;
  r.xhy = ctx.apply_xh(y);
  r.wy.reserve(bank.size());
  RealVec e(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    r.wy.push_back(bank.w_filters[i].apply(y));
    // tr(X W C_hat) = y^H X W y / sigma^2, real for MMSE filters
    e[i] = kernels::dot_conj(r.xhy, r.wy.back()).real() / ctx.sigma2() + bank.b[i];
  }
  r.weights = softmax(e);
  return r;
}

}  // namespace

ComplexMat conditional_mmse_filter(const ComplexMat& c_delta, const EstimatorContext& ctx) {
  return linear_mmse_filter(c_delta, ctx);
}

double mmse_log_det_offset(const ComplexMat& c_delta, const EstimatorContext& ctx) {
  require_positive_noise(ctx, "log-det offset");
  const ComplexMat& x = ctx.x();
  ComplexMat m = (x * c_delta) * x.adjoint();
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += ctx.sigma2();
  return static_cast<double>(m.rows()) * std::log(ctx.sigma2()) - hermitian_logdet(m);
}

ComplexMat cluster_covariance(const Shape2D& shape, const GridLabel& center, const SpectrumModel& model) {
  validate(shape);
  return kron(axis_covariance(shape.n_tx, center.aod_deg, model), axis_covariance(shape.n_rx, center.aoa_deg, model));
}

GriddedFilterBank filter_bank(const PriorGrid& grid, const EstimatorContext& ctx) {
  GriddedFilterBank bank;
  bank.w_filters.resize(grid.size());
  bank.b.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    bank.w_filters[i] = conditional_mmse_filter(grid.covs[i], ctx);
    bank.b[i] = mmse_log_det_offset(grid.covs[i], ctx);
  });
  for (std::size_t i = 0; i < bank.b.size(); ++i) {
    if (!std::isfinite(bank.b[i])) fail(ErrorKind::DegenerateGrid, "non-finite log-det offset at grid point " + std::to_string(i));
  }
  return bank;
}

std::pair<PriorGrid, GriddedFilterBank> build_grid(const Shape2D& shape, std::size_t p, const EstimatorContext& ctx,
                                                  const SpectrumModel& model) {
  validate(shape);
  if (p == 0) fail(ErrorKind::DegenerateGrid, "grid needs at least one point");
  if (!(shape == ctx.shape())) fail(ErrorKind::InvalidDimension, "grid shape does not match estimator context");
  // Most square factorization p = n_aoa * n_aod with n_aoa <= n_aod.
  std::size_t n_aoa = 1;
  for (std::size_t d = 1; d * d <= p; ++d) {
    if (p % d == 0) n_aoa = d;
  }
  const std::size_t n_aod = p / n_aoa;
  const double half = 0.5 * model.sector_deg;
  auto center = [&](std::size_t i, std::size_t n) {
    return -half + model.sector_deg * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  };

  PriorGrid grid;
  grid.covs.resize(p);
  grid.labels.resize(p);
  grid.weights.assign(p, 1.0 / static_cast<double>(p));
  for (std::size_t a = 0; a < n_aoa; ++a)
    for (std::size_t d = 0; d < n_aod; ++d) grid.labels[a * n_aod + d] = {center(a, n_aoa), center(d, n_aod)};
  parallel_for(p, [&](std::size_t i) { grid.covs[i] = cluster_covariance(shape, grid.labels[i], model); });
  GriddedFilterBank bank = filter_bank(grid, ctx);
  return {std::move(grid), std::move(bank)};
}

RealVec gridded_weights(std::span<const cplx> y, const GriddedFilterBank& bank, const EstimatorContext& ctx) {
  return evaluate_grid(y, bank, ctx).weights;
}

ComplexVec gridded_estimate(std::span<const cplx> y, const GriddedFilterBank& bank, const EstimatorContext& ctx) {
  const Responses r = evaluate_grid(y, bank, ctx);
  ComplexVec h(ctx.shape().size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (r.weights[i] != 0.0) kernels::axpy(r.weights[i], r.wy[i], h);
  }
  return h;
}

RealVec compute_chat(std::span<const cplx> y, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "compute_chat");
  require_positive_noise(ctx, "compute_chat");
  ComplexVec t = ctx.apply_xh(y);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Forward);
  RealVec chat(t.size());
  kernels::abs2(t, 1.0 / ctx.sigma2(), chat);
  return chat;
}

RealVec structured_gains(std::span<const double> chat, const StructuredBank& bank) {
  if (chat.size() != bank.n) fail(ErrorKind::InvalidDimension, "structured gains: input length mismatch");
  if (bank.p == 0 || bank.b.size() != bank.p || bank.a_mat.size() != bank.n * bank.p) {
    fail(ErrorKind::DegenerateGrid, "malformed structured bank");
  }
  RealVec e(bank.p);
  for (std::size_t i = 0; i < bank.p; ++i) {
    const auto col = bank.column(i);
    double s = bank.b[i];
    for (std::size_t k = 0; k < bank.n; ++k) s += col[k] * chat[k];
    e[i] = s;
  }
  const RealVec weights = softmax(e);
  RealVec w(bank.n, 0.0);
  for (std::size_t i = 0; i < bank.p; ++i) {
    const auto col = bank.column(i);
    for (std::size_t k = 0; k < bank.n; ++k) w[k] += col[k] * weights[i];
  }
  return w;
}

ComplexVec structured_estimate(std::span<const cplx> y, const StructuredBank& bank, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "structured_estimate");
  require_positive_noise(ctx, "structured_estimate");
  ComplexVec t = ctx.apply_xh(y);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Forward);
  RealVec chat(t.size());
  kernels::abs2(t, 1.0 / ctx.sigma2(), chat);
  const RealVec w = structured_gains(chat, bank);
  kernels::scale_real(w, t, t);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Adjoint);
  return t;
}

CirculantSpectra circulant_spectra(const Shape2D& shape, std::size_t p, double width_bins, double floor) {
  validate(shape);
  if (p == 0) fail(ErrorKind::DegenerateGrid, "grid needs at least one point");
  if (!(width_bins > 0.0)) fail(ErrorKind::DegenerateGrid, "bump width must be positive");
  const std::size_t n = shape.size();
  auto circ_dist = [](std::size_t a, std::size_t b, std::size_t m) {
    const std::size_t d = a > b ? a - b : b - a;
    return static_cast<double>(std::min(d, m - d));
  };
  CirculantSpectra out;
  out.shape = shape;
  out.spectra.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t cell = (i * n) / p;
    const std::size_t cr = cell % shape.n_rx;
    const std::size_t ct = cell / shape.n_rx;
    RealVec c(n);
    double sum = 0.0;
    for (std::size_t t = 0; t < shape.n_tx; ++t)
      for (std::size_t r = 0; r < shape.n_rx; ++r) {
        const double dr = circ_dist(r, cr, shape.n_rx);
        const double dt = circ_dist(t, ct, shape.n_tx);
        const double v = std::exp(-0.5 * (dr * dr + dt * dt) / (width_bins * width_bins)) + floor;
        c[t * shape.n_rx + r] = v;
        sum += v;
      }
    for (auto& v : c) v *= static_cast<double>(n) / sum;
    out.spectra[i] = std::move(c);
  }
  return out;
}

std::pair<GriddedFilterBank, StructuredBank> circulant_grid(const CirculantSpectra& spectra, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "circulant_grid");
  require_positive_noise(ctx, "circulant_grid");
  if (!(spectra.shape == ctx.shape())) fail(ErrorKind::InvalidDimension, "spectra shape does not match context");
  const std::size_t n = spectra.shape.size();
  const std::size_t p = spectra.spectra.size();
  const ComplexMat q = dense_q(spectra.shape);
  const ComplexMat qh = q.adjoint();

  PriorGrid grid;
  grid.covs.resize(p);
  grid.weights.assign(p, 1.0 / static_cast<double>(p));
  grid.labels.resize(p);
  StructuredBank sb;
  sb.n = n;
  sb.p = p;
  sb.a_mat.resize(n * p);
  sb.b.resize(p);
  const double sigma2 = ctx.sigma2();
  for (std::size_t i = 0; i < p; ++i) {
    const RealVec& c = spectra.spectra[i];
    if (c.size() != n) fail(ErrorKind::InvalidDimension, "spectrum length mismatch");
    // C = Q^H diag(c) Q
    ComplexMat dq = q;
    for (std::size_t col = 0; col < n; ++col)
      for (std::size_t row = 0; row < n; ++row) dq(row, col) *= c[row];
    ComplexMat cov = qh * dq;
    for (std::size_t j = 0; j < n; ++j) {
      cov(j, j) = {cov(j, j).real(), 0.0};
      for (std::size_t k = j + 1; k < n; ++k) {
        const cplx v = 0.5 * (cov(k, j) + std::conj(cov(j, k)));
        cov(k, j) = v;
        cov(j, k) = std::conj(v);
      }
    }
    grid.covs[i] = std::move(cov);
    double b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = c[k] / (c[k] + sigma2);
      sb.a_mat[i * n + k] = w;
      b += std::log(sigma2 / (c[k] + sigma2));
    }
    sb.b[i] = b;
  }
  GriddedFilterBank bank = filter_bank(grid, ctx);
  return {std::move(bank), std::move(sb)};
}

std::pair<GriddedFilterBank, StructuredBank> circulant_grid(const Shape2D& shape, std::size_t p,
                                                           const EstimatorContext& ctx) {
  return circulant_grid(circulant_spectra(shape, p), ctx);
}

StructuredBank structured_from_grid(const PriorGrid& grid, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "structured_from_grid");
  require_positive_noise(ctx, "structured_from_grid");
  const std::size_t n = ctx.shape().size();
  StructuredBank sb;
  sb.n = n;
  sb.p = grid.size();
  sb.a_mat.resize(n * sb.p);
  sb.b.resize(sb.p);
  const double sigma2 = ctx.sigma2();
  parallel_for(sb.p, [&](std::size_t i) {
    const ComplexMat& c = grid.covs[i];
    if (c.rows() != n || c.cols() != n) fail(ErrorKind::InvalidDimension, "grid covariance size mismatch");
    // diag(Q C Q^H) = diag(Q (Q C)^H) for Hermitian C
    ComplexMat qc(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      const ComplexVec col = ctx.dft2().apply(c.col(j), Direction::Forward);
      std::copy(col.begin(), col.end(), qc.col(j).begin());
    }
    const ComplexMat qch = qc.adjoint();
    double b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const ComplexVec col = ctx.dft2().apply(qch.col(k), Direction::Forward);
      const double ck = std::max(col[k].real(), 0.0);
      const double w = ck / (ck + sigma2);
      sb.a_mat[i * n + k] = w;
      b += std::log(sigma2 / (ck + sigma2));
    }
    sb.b[i] = b;
  });
  return sb;
}

}  // namespace fdce
