#include "fdce/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fdce/kernels.hpp"

namespace fdce {

ComplexVec ls_estimate(std::span<const cplx> y, const EstimatorContext& ctx) {
  if (y.size() != ctx.obs_len()) fail(ErrorKind::InvalidDimension, "ls_estimate: observation length mismatch");
  if (ctx.x_unitary()) return ctx.apply_xh(y);
  return pinv_solve(ctx.x(), y);
}

ComplexMat linear_mmse_filter(const ComplexMat& c, const EstimatorContext& ctx) {
  const ComplexMat& x = ctx.x();
  if (c.rows() != x.cols() || c.cols() != x.cols()) fail(ErrorKind::InvalidDimension, "covariance size does not match pilots");
  const ComplexMat xc = x * c;
  ComplexMat m = xc * x.adjoint();
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += ctx.sigma2();
  // W = C X^H M^{-1} = (M^{-1} X C)^H for Hermitian C and M.
  return hermitian_solve(m, xc).adjoint();
}

LmmseEstimator::LmmseEstimator(const ComplexMat& c_glob, const EstimatorContext& ctx)
    : w_(linear_mmse_filter(c_glob, ctx)) {}

ComplexVec lmmse_global(std::span<const cplx> y, const ComplexMat& c_glob, const EstimatorContext& ctx) {
  if (y.size() != ctx.obs_len()) fail(ErrorKind::InvalidDimension, "lmmse_global: observation length mismatch");
  return LmmseEstimator(c_glob, ctx)(y);
}

namespace {

void require_full_pilots(const EstimatorContext& ctx, const char* who) {
  if (!ctx.full_pilots()) fail(ErrorKind::UnsupportedConfiguration, std::string(who) + " requires square (full) pilots");
}

}  // namespace

RealVec ml_structured_gains(std::span<const cplx> y, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "ml_structured");
  ComplexVec t = ctx.apply_xh(y);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Forward);
  RealVec s(t.size());
  kernels::abs2(t, 1.0, s);
  const double sigma2 = ctx.sigma2();
  RealVec g(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = std::max(s[i] - sigma2, 0.0);
    g[i] = c > 0.0 ? c / (c + sigma2) : 0.0;
  }
  return g;
}

ComplexVec ml_structured(std::span<const cplx> y, const EstimatorContext& ctx) {
  require_full_pilots(ctx, "ml_structured");
  ComplexVec t = ctx.apply_xh(y);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Forward);
  RealVec s(t.size());
  kernels::abs2(t, 1.0, s);
  const double sigma2 = ctx.sigma2();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = std::max(s[i] - sigma2, 0.0);
    s[i] = c > 0.0 ? c / (c + sigma2) : 0.0;
  }
  kernels::scale_real(s, t, t);
  ctx.dft2().apply(std::span<cplx>(t), Direction::Adjoint);
  return t;
}

ComplexMat oversampled_dft(std::size_t n, std::size_t oversampling) {
  if (n == 0 || oversampling == 0) fail(ErrorKind::InvalidDimension, "dictionary factors must be >= 1");
  const std::size_t g = n * oversampling;
  ComplexMat d(n, g);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t col = 0; col < g; ++col)
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>((k * col) % g) / static_cast<double>(g);
      d(k, col) = std::polar(scale, ang);
    }
  return d;
}

OmpDictionary build_dictionary(const Shape2D& shape, std::size_t oversampling_rx, std::size_t oversampling_tx) {
  validate(shape);
  OmpDictionary out;
  out.d = kron(oversampled_dft(shape.n_tx, oversampling_tx), oversampled_dft(shape.n_rx, oversampling_rx));
  out.oversampling_rx = oversampling_rx;
  out.oversampling_tx = oversampling_tx;
  return out;
}

ComplexVec OmpResult::dense(std::size_t n) const {
  ComplexVec t(n);
  for (std::size_t i = 0; i < support.size(); ++i) t.at(support[i]) = coefficients[i];
  return t;
}

std::vector<OmpResult> omp_path(const ComplexMat& a, std::span<const cplx> y, std::size_t k) {
  if (y.size() != a.rows()) fail(ErrorKind::InvalidDimension, "omp: rows(a) != len(y)");
  std::vector<OmpResult> path;
  if (k == 0) return path;
  k = std::min({k, a.rows(), a.cols()});

  RealVec col_norm(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) col_norm[j] = std::sqrt(kernels::sq_norm(a.col(j)));

  std::vector<ComplexVec> basis;           // orthonormal columns
  std::vector<ComplexVec> r_cols;          // R columns, r_cols[j][i] = R(i, j)
  ComplexVec z;                            // basis^H y
  std::vector<bool> used(a.cols(), false);
  std::vector<std::size_t> support;
  ComplexVec residual(y.begin(), y.end());
  const double y_norm = std::sqrt(kernels::sq_norm(y));

  for (std::size_t it = 0; it < k; ++it) {
    if (std::sqrt(kernels::sq_norm(residual)) <= 1e-14 * std::max(y_norm, 1e-300)) break;
    std::size_t best = a.cols();
    double best_corr = -1.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (used[j] || col_norm[j] == 0.0) continue;
      const double c = std::abs(kernels::dot_conj(a.col(j), residual)) / col_norm[j];
      if (c > best_corr) {
        best_corr = c;
        best = j;
      }
    }
    if (best == a.cols()) break;

    ComplexVec v(a.col(best).begin(), a.col(best).end());
    ComplexVec rcol(basis.size() + 1);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const cplx alpha = kernels::dot_conj(basis[i], v);
        kernels::axpy(-alpha, basis[i], v);
        rcol[i] += alpha;
      }
    }
    const double nv = std::sqrt(kernels::sq_norm(v));
    if (nv <= 1e-12 * col_norm[best]) break;
    for (auto& e : v) e /= nv;
    rcol.back() = nv;

    used[best] = true;
    support.push_back(best);
    const cplx zi = kernels::dot_conj(v, residual);
    kernels::axpy(-zi, v, residual);
    basis.push_back(std::move(v));
    r_cols.push_back(std::move(rcol));
    z.push_back(zi);

    // Back-substitution R t = z.
    const std::size_t s = support.size();
    ComplexVec t(s);
    for (std::size_t ii = s; ii-- > 0;) {
      cplx acc = z[ii];
      for (std::size_t j = ii + 1; j < s; ++j) acc -= r_cols[j][ii] * t[j];
      t[ii] = acc / r_cols[ii][ii];
    }
    OmpResult res;
    res.support = support;
    res.coefficients = std::move(t);
    res.residual_norm = std::sqrt(kernels::sq_norm(residual));
    path.push_back(std::move(res));
  }
  return path;
}

OmpResult omp(const ComplexMat& a, std::span<const cplx> y, std::size_t k) {
  auto path = omp_path(a, y, k);
  if (path.empty()) {
    OmpResult r;
    r.residual_norm = std::sqrt(kernels::sq_norm(y));
    return r;
  }
  return std::move(path.back());
}

GenieOmp::GenieOmp(const EstimatorContext& ctx, OmpDictionary dict) : dict_(std::move(dict)) {
  if (dict_.d.rows() != ctx.shape().size()) fail(ErrorKind::InvalidDimension, "dictionary rows do not match channel size");
  xd_ = ComplexMat(ctx.obs_len(), dict_.d.cols());
  for (std::size_t j = 0; j < dict_.d.cols(); ++j) {
    const ComplexVec c = ctx.apply_x(dict_.d.col(j));
    std::copy(c.begin(), c.end(), xd_.col(j).begin());
  }
}

GenieOmp::Result GenieOmp::run(std::span<const cplx> y, std::span<const cplx> h_true, std::size_t k_max) const {
  if (h_true.size() != dict_.d.rows()) fail(ErrorKind::InvalidDimension, "genie OMP: h_true length mismatch");
  Result out;
  out.h_hat.assign(h_true.size(), cplx{});
  const auto path = omp_path(xd_, y, k_max);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < path.size(); ++k) {
    ComplexVec h(h_true.size());
    for (std::size_t i = 0; i < path[k].support.size(); ++i) {
      kernels::axpy(path[k].coefficients[i], dict_.d.col(path[k].support[i]), h);
    }
    const double err = kernels::sq_dist(h, h_true);
    out.errors.push_back(err);
    if (err < best) {
      best = err;
      out.best_k = k + 1;
      out.h_hat = std::move(h);
    }
  }
  return out;
}

ComplexVec genie_omp_estimate(std::span<const cplx> y, const EstimatorContext& ctx, const OmpDictionary& dict,
                              std::span<const cplx> h_true, std::size_t k_max) {
  return GenieOmp(ctx, dict).run(y, h_true, k_max).h_hat;
}

}  // namespace fdce
