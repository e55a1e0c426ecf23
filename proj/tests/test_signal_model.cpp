#include <doctest.h>

#include <cmath>

#include "fdce/channel_sim.hpp"
#include "fdce/kernels.hpp"
#include "fdce/signal_model.hpp"
#include "test_helpers.hpp"

using namespace fdce;
using namespace fdce::test;

TEST_CASE("pilot matrix") {
  const ComplexMat x = pilot_matrix({8, 8, {4, 8}});
  CHECK(max_abs_diff(x * x.adjoint(), ComplexMat::identity(8)) < 1e-12);
  CHECK(pilot_matrix({1, 1, {1, 1}})(0, 0) == cplx(1.0));
  const ComplexMat sub = pilot_matrix({8, 3, {4, 8}});
  REQUIRE(sub.cols() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      n2 += std::norm(sub(i, j));
      CHECK(std::abs(sub(i, j) - x(i, j)) < 1e-15);
    }
    CHECK(std::abs(n2 - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(pilot_matrix({8, 9, {4, 8}}), Error);
}

TEST_CASE("lifted pilots") {
  Rng rng = Rng::derive(1, Stream::Test, {300});
  const ComplexMat xp = pilot_matrix({8, 8, {4, 8}});
  CHECK(lift_pilot(xp, 1) == xp.transpose());
  const ComplexMat x = lift_pilot(xp, 4);
  CHECK(max_abs_diff(x.adjoint() * x, ComplexMat::identity(32)) < 1e-12);
  // X vec(H) = vec(H X')
  const ComplexMat h = random_mat(4, 8, rng);
  CHECK(max_abs_diff(x.apply(vec(h)), vec(h * xp)) < 1e-12);
  const ComplexVec hv = vec(h);
  CHECK(std::abs(kernels::sq_norm(x.apply(hv)) - kernels::sq_norm(hv)) < 1e-12 * kernels::sq_norm(hv));
}

TEST_CASE("SNR conversion") {
  CHECK(snr_to_sigma2(0.0) == 1.0);
  CHECK(std::abs(snr_to_sigma2(10.0) - 0.1) < 1e-16);
  CHECK(std::abs(snr_to_sigma2(-15.0) - 31.6227766016838) < 1e-12);
}

TEST_CASE("observations") {
  const Shape2D s{4, 8};
  const PilotConfig pc = full_pilots(s);
  const ComplexMat x = lift_pilot(pilot_matrix(pc), 4);
  Rng rng = Rng::derive(2, Stream::Test);
  const ComplexVec h = random_vec(32, rng);

  SUBCASE("noise-free limit") {
    Rng r(1);
    const Observation o = observe(h, x, 0.0, r, pc);
    CHECK(max_abs_diff(o.y, x.apply(h)) == 0.0);
  }
  SUBCASE("noise power and reproducibility") {
    const double sigma2 = 0.3;
    double e = 0.0;
    const std::size_t draws = 100000 / 32 + 1;
    Rng r(2);
    const ComplexVec xh = x.apply(h);
    for (std::size_t i = 0; i < draws; ++i) e += kernels::sq_dist(observe(h, x, sigma2, r, pc).y, xh);
    e /= static_cast<double>(draws);
    CHECK(std::abs(e / (sigma2 * 32.0) - 1.0) < 0.02);
    Rng a(3), b(3);
    CHECK(observe(h, x, sigma2, a, pc).y == observe(h, x, sigma2, b, pc).y);
  }
  SUBCASE("dimension mismatch") {
    Rng r(4);
    CHECK_THROWS_AS(observe(ComplexVec(31), x, 1.0, r, pc), Error);
  }
}

TEST_CASE("fast pilot application matches the dense matrix") {
  Rng rng = Rng::derive(3, Stream::Test);
  for (std::size_t np : {8u, 5u}) {
    const PilotConfig pc{8, np, {4, 8}};
    const EstimatorContext ctx(pc, 0.5);
    const ComplexMat x = lift_pilot(pilot_matrix(pc), 4);
    const ComplexVec h = random_vec(32, rng), y = random_vec(4 * np, rng);
    CHECK(max_abs_diff(ctx.apply_x(h), x.apply(h)) < 1e-12);
    CHECK(max_abs_diff(ctx.apply_xh(y), x.apply_adjoint(y)) < 1e-12);
    CHECK(ctx.full_pilots() == (np == 8));
    CHECK(ctx.x_unitary() == (np == 8));
  }
}

TEST_CASE("empirical SNR on a normalized dataset") {
  const PairedDatasets p = generate_paired_datasets(ScenarioConfig{}, 1, 10000, 1);
  const Dataset& d = p.get(DomainTag::Dl, SplitTag::Train);
  for (double snr_db : {-10.0, 5.0, 20.0}) {
    const EstimatorContext ctx(full_pilots(d.shape), snr_to_sigma2(snr_db));
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      Rng rng = Rng::derive(4, Stream::Noise, {i});
      const ComplexVec xh = ctx.apply_x(d.samples[i].h);
      const ComplexVec y = ctx.observe(d.samples[i].h, rng);
      sig += kernels::sq_norm(xh);
      noise += kernels::sq_dist(y, xh);
    }
    CHECK(std::abs((sig / noise) / (1.0 / snr_to_sigma2(snr_db)) - 1.0) < 0.05);
  }
}
