#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "fdce/baselines.hpp"
#include "fdce/channel_sim.hpp"
#include "fdce/kernels.hpp"
#include "test_helpers.hpp"

using namespace fdce;
using namespace fdce::test;

namespace {

double nmse_of(const ComplexVec& h_hat, const ComplexVec& h) { return kernels::sq_dist(h_hat, h) / kernels::sq_norm(h); }

// Least-squares residual of y on the given columns, via the normal equations.
double support_residual(const ComplexMat& a, const ComplexVec& y, const std::vector<std::size_t>& s) {
  ComplexMat sub(a.rows(), s.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) sub(i, j) = a(i, s[j]);
  ComplexMat rhs(s.size(), 1);
  const ComplexVec ahy = sub.apply_adjoint(y);
  for (std::size_t j = 0; j < s.size(); ++j) rhs(j, 0) = ahy[j];
  const ComplexMat coef = dense_inverse(sub.adjoint() * sub) * rhs;
  ComplexVec fit(a.rows(), 0.0);
  for (std::size_t j = 0; j < s.size(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) fit[i] += sub(i, j) * coef(j, 0);
  return std::sqrt(kernels::sq_dist(fit, y));
}

}  // namespace

TEST_CASE("least squares") {
  const Shape2D s{4, 8};
  Rng rng = Rng::derive(1, Stream::Test, {400});
  const ComplexVec h = random_vec(32, rng);
  const EstimatorContext ctx(full_pilots(s), 0.1);
  CHECK(max_abs_diff(ls_estimate(ctx.apply_x(h), ctx), h) < 1e-10);

  // Subsampled pilots go through the pseudo-inverse: the estimate is the
  // minimum-norm solution, so applying X to it reproduces the observation.
  const EstimatorContext sub({8, 5, s}, 0.1);
  const ComplexVec y = sub.apply_x(h);
  CHECK(max_abs_diff(sub.apply_x(ls_estimate(y, sub)), y) < 1e-10);

  SUBCASE("NMSE equals sigma^2 on Gaussian data") {
    const Dataset d = generate_gaussian_dataset(s, 10000, 5, SplitTag::Test);
    for (double snr : {-10.0, 0.0, 10.0, 20.0}) {
      const EstimatorContext c(full_pilots(s), snr_to_sigma2(snr));
      double err = 0.0, pow = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        Rng r = Rng::derive(6, Stream::Noise, {i});
        err += kernels::sq_dist(ls_estimate(c.observe(d.samples[i].h, r), c), d.samples[i].h);
        pow += kernels::sq_norm(d.samples[i].h);
      }
      CHECK(std::abs((err / pow) / snr_to_sigma2(snr) - 1.0) < 0.02);
    }
  }
}

TEST_CASE("LMMSE with a global covariance") {
  Rng rng = Rng::derive(2, Stream::Test);
  const Shape2D s{2, 2};
  SUBCASE("identity covariance is scalar shrinkage") {
    const EstimatorContext ctx(full_pilots(s), 0.5);
    const ComplexVec y = random_vec(4, rng);
    ComplexVec expect = ctx.apply_xh(y);
    for (auto& v : expect) v /= 1.5;
    CHECK(max_abs_diff(lmmse_global(y, ComplexMat::identity(4), ctx), expect) < 1e-12);
  }
  SUBCASE("dense inverse oracle") {
    for (std::size_t np : {2u, 1u}) {
      const EstimatorContext ctx({2, np, s}, 0.3);
      const ComplexMat c = random_psd(4, rng);
      const ComplexMat& x = ctx.x();
      const ComplexMat xh = x.adjoint();
      ComplexMat m = x * c * xh;
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 0.3;
      const ComplexMat w = c * xh * dense_inverse(m);
      const ComplexVec y = random_vec(x.rows(), rng);
      CHECK(max_abs_diff(lmmse_global(y, c, ctx), w.apply(y)) < 1e-10);
      CHECK(max_abs_diff(LmmseEstimator(c, ctx).filter(), w) < 1e-10);
    }
  }
  SUBCASE("large noise drives the estimate to zero") {
    const EstimatorContext ctx(full_pilots(s), 1e12);
    const ComplexVec y = random_vec(4, rng);
    CHECK(kernels::sq_norm(lmmse_global(y, random_psd(4, rng), ctx)) < 1e-18);
  }
  SUBCASE("indefinite covariance") {
    const EstimatorContext ctx(full_pilots(s), 1e-3);
    CHECK_THROWS_AS(linear_mmse_filter(-1.0 * ComplexMat::identity(4), ctx), Error);
  }
}

TEST_CASE("LMMSE beats LS on a Gaussian source with its true covariance") {
  Rng rng = Rng::derive(3, Stream::Test);
  const Shape2D s{2, 4};
  const ComplexMat b = random_mat(8, 3, rng);  // rank-3 colouring
  const ComplexMat c = b * b.adjoint();
  const std::size_t n = 10000;
  for (double snr : {-10.0, 0.0, 10.0, 20.0}) {
    const EstimatorContext ctx(full_pilots(s), snr_to_sigma2(snr));
    const LmmseEstimator lmmse(c, ctx);
    RealVec diff(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng r = Rng::derive(7, Stream::Noise, {i});
      const ComplexVec h = b.apply(random_vec(3, r));
      const ComplexVec y = ctx.observe(h, r);
      diff[i] = kernels::sq_dist(lmmse(y), h) - kernels::sq_dist(ls_estimate(y, ctx), h);
    }
    double mean = 0.0, var = 0.0;
    for (double d : diff) mean += d / n;
    for (double d : diff) var += (d - mean) * (d - mean) / (n - 1);
    CHECK(mean <= 3.0 * std::sqrt(var / n));
  }
}

TEST_CASE("ML structured estimator") {
  const Shape2D s{4, 8};
  Rng rng = Rng::derive(4, Stream::Test);
  const ComplexVec y = random_vec(32, rng);
  SUBCASE("per-coordinate gain oracle") {
    const double sigma2 = 0.7;
    const EstimatorContext ctx(full_pilots(s), sigma2);
    const ComplexVec t = dense_q(s).apply(ctx.apply_xh(y));
    const RealVec g = ml_structured_gains(y, ctx);
    for (std::size_t i = 0; i < 32; ++i) {
      const double c = std::max(std::norm(t[i]) - sigma2, 0.0);
      CHECK(std::abs(g[i] - c / (c + sigma2)) < 1e-12);
    }
    ComplexVec filtered(32);
    for (std::size_t i = 0; i < 32; ++i) filtered[i] = g[i] * t[i];
    CHECK(max_abs_diff(ml_structured(y, ctx), dense_q(s).apply_adjoint(filtered)) < 1e-12);
  }
  SUBCASE("no noise reduces to LS") {
    const EstimatorContext ctx(full_pilots(s), 0.0);
    CHECK(max_abs_diff(ml_structured(y, ctx), ctx.apply_xh(y)) < 1e-12);
  }
  SUBCASE("full clipping gives zero") {
    const double sigma2 = 2.0;
    const EstimatorContext ctx(full_pilots(s), sigma2);
    // Q X^H y with every entry of squared magnitude sigma^2.
    ComplexVec t(32);
    for (std::size_t i = 0; i < 32; ++i) t[i] = std::polar(std::sqrt(sigma2), 0.3 * static_cast<double>(i));
    const ComplexVec yy = ctx.apply_x(dense_q(s).apply_adjoint(t));
    CHECK(kernels::sq_norm(ml_structured(yy, ctx)) < 1e-20);
  }
  SUBCASE("subsampled pilots are rejected") {
    const EstimatorContext ctx({8, 4, s}, 1.0);
    CHECK_THROWS_AS(ml_structured(random_vec(16, rng), ctx), Error);
  }
}

TEST_CASE("oversampled DFT dictionary") {
  const OmpDictionary d1 = build_dictionary({4, 8}, 1, 1);
  CHECK(max_abs_diff(d1.d.adjoint() * d1.d, ComplexMat::identity(32)) < 1e-12);
  // Equals Q^H up to column phases: every |<q_i, d_j>| is 0 or 1.
  const ComplexMat g = dense_q({4, 8}) * d1.d;
  for (const auto& v : g.data()) CHECK((std::abs(v) < 1e-10 || std::abs(std::abs(v) - 1.0) < 1e-10));

  const OmpDictionary d = build_dictionary({4, 8}, 2, 2);
  REQUIRE(d.d.rows() == 32);
  REQUIRE(d.d.cols() == 128);
  double coherence = 0.0;
  for (std::size_t j = 0; j < 128; ++j) {
    CHECK(std::abs(kernels::sq_norm(d.d.col(j)) - 1.0) < 1e-12);
    for (std::size_t k = j + 1; k < 128; ++k) coherence = std::max(coherence, std::abs(kernels::dot_conj(d.d.col(j), d.d.col(k))));
  }
  CHECK(coherence < 1.0 - 1e-9);
  // Kronecker order: D = D_tx (x) D_rx.
  CHECK(max_abs_diff(d.d, kron(oversampled_dft(8, 2), oversampled_dft(4, 2))) == 0.0);
  CHECK_THROWS_AS(build_dictionary({4, 8}, 0, 2), Error);
}

TEST_CASE("orthogonal matching pursuit") {
  Rng rng = Rng::derive(5, Stream::Test);
  SUBCASE("one-sparse") {
    const ComplexMat a = random_mat(8, 24, rng);
    ComplexVec y(a.col(5).begin(), a.col(5).end());
    for (auto& v : y) v *= 3.0;
    const OmpResult r = omp(a, y, 1);
    REQUIRE(r.support == std::vector<std::size_t>{5});
    CHECK(std::abs(r.coefficients[0] - 3.0) < 1e-12);
  }
  SUBCASE("orthogonal columns") {
    const ComplexMat a = unitary_dft(8);
    ComplexVec y(8);
    for (std::size_t i = 0; i < 8; ++i) y[i] = 2.0 * a(i, 1) + 1.0 * a(i, 6);
    const OmpResult r = omp(a, y, 2);
    const ComplexVec dense = r.dense(8);
    CHECK(std::abs(dense[1] - 2.0) < 1e-12);
    CHECK(std::abs(dense[6] - 1.0) < 1e-12);
  }
  SUBCASE("k = 0 gives the zero vector") {
    const OmpResult r = omp(random_mat(8, 24, rng), random_vec(8, rng), 0);
    CHECK(r.support.empty());
  }
  SUBCASE("never beats exhaustive support search, support unique, residual orthogonal") {
    for (int trial = 0; trial < 10; ++trial) {
      const ComplexMat a = random_mat(8, 24, rng);
      const ComplexVec y = random_vec(8, rng);
      const OmpResult r = omp(a, y, 3);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < 24; ++i)
        for (std::size_t j = i + 1; j < 24; ++j)
          for (std::size_t k = j + 1; k < 24; ++k) best = std::min(best, support_residual(a, y, {i, j, k}));
      CHECK(std::isfinite(r.residual_norm));
      CHECK(r.residual_norm >= best - 1e-10);
      std::set<std::size_t> uniq(r.support.begin(), r.support.end());
      CHECK(uniq.size() == r.support.size());
      ComplexVec resid = y;
      for (std::size_t m = 0; m < r.support.size(); ++m)
        for (std::size_t i = 0; i < 8; ++i) resid[i] -= a(i, r.support[m]) * r.coefficients[m];
      CHECK(std::abs(std::sqrt(kernels::sq_norm(resid)) - r.residual_norm) < 1e-10);
      for (std::size_t col : r.support) CHECK(std::abs(kernels::dot_conj(a.col(col), resid)) < 1e-8);
    }
  }
}

TEST_CASE("genie-aided OMP") {
  const Shape2D s{4, 8};
  Rng rng = Rng::derive(6, Stream::Test);
  const OmpDictionary dict = build_dictionary(s, 2, 2);
  SUBCASE("noiseless one-sparse channel is recovered") {
    const EstimatorContext ctx(full_pilots(s), 0.0);
    ComplexVec h(dict.d.col(37).begin(), dict.d.col(37).end());
    for (auto& v : h) v *= cplx(1.5, -0.5);
    CHECK(max_abs_diff(genie_omp_estimate(ctx.apply_x(h), ctx, dict, h, 16), h) < 1e-8);
  }
  SUBCASE("genie choice dominates every fixed sparsity and is monotone in k_max") {
    const EstimatorContext ctx(full_pilots(s), 0.3);
    const GenieOmp genie(ctx, dict);
    for (int trial = 0; trial < 10; ++trial) {
      const ComplexVec h = random_vec(32, rng);
      Rng r = Rng::derive(8, Stream::Noise, {static_cast<std::uint64_t>(trial)});
      const ComplexVec y = ctx.observe(h, r);
      const auto res = genie.run(y, h, 16);
      const double err = kernels::sq_dist(res.h_hat, h);
      for (double e : res.errors) CHECK(err <= e + 1e-12);
      const auto path = omp_path(genie.effective(), y, 16);
      for (std::size_t k = 0; k < path.size(); ++k) {
        const ComplexVec hk = dict.d.apply(path[k].dense(dict.d.cols()));
        CHECK(err <= kernels::sq_dist(hk, h) + 1e-9);
      }
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t kmax = 1; kmax <= 16; ++kmax) {
        const double e = nmse_of(genie.run(y, h, kmax).h_hat, h);
        CHECK(e <= prev + 1e-12);
        prev = e;
      }
    }
  }
}
