#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_helpers.hpp"

using namespace fdce;
using namespace fdce::test;

namespace {

double norm2(const ComplexVec& v) {
  double s = 0.0;
  for (const auto& e : v) s += std::norm(e);
  return s;
}

double max_dev_from_identity(const ComplexMat& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - cplx(i == j ? 1.0 : 0.0)));
  return worst;
}

}  // namespace

TEST_CASE("unitary_dft") {
  CHECK(unitary_dft(1)(0, 0) == cplx(1.0));
  const ComplexMat f2 = unitary_dft(2);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(f2(0, 0) - r) < 1e-15);
  CHECK(std::abs(f2(1, 1) + r) < 1e-15);
  for (std::size_t n = 1; n <= 128; ++n) {
    const ComplexMat f = unitary_dft(n);
    CHECK(max_dev_from_identity(f.adjoint() * f) < 1e-12);
  }
  CHECK_THROWS_AS(unitary_dft(0), Error);
}

TEST_CASE("kron follows the block definition") {
  CHECK(kron(ComplexMat::identity(2), ComplexMat::identity(2)) == ComplexMat::identity(4));
  ComplexMat two(1, 1);
  two(0, 0) = 2.0;
  CHECK(kron(two, ComplexMat::identity(2)) == 2.0 * ComplexMat::identity(2));

  Rng rng = Rng::derive(1, Stream::Test, {200});
  const ComplexMat a = random_mat(2, 2, rng), b = random_mat(3, 3, rng);
  const ComplexMat k = kron(a, b);
  REQUIRE(k.rows() == 6);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = 0; q < 3; ++q) CHECK(k(i * 3 + p, j * 3 + q) == a(i, j) * b(p, q));
}

TEST_CASE("vec and unvec are column-major and exact inverses") {
  ComplexMat m(2, 2);
  m(0, 0) = 1;
  m(1, 0) = 2;
  m(0, 1) = 3;
  m(1, 1) = 4;
  CHECK(vec(m) == ComplexVec{1, 2, 3, 4});
  CHECK(unvec(ComplexVec{1, 2, 3, 4}, {2, 2}) == m);
  Rng rng = Rng::derive(2, Stream::Test);
  const ComplexMat h = random_mat(4, 8, rng);
  CHECK(unvec(vec(h), {4, 8}) == h);
  CHECK_THROWS_AS(unvec(ComplexVec(5), {2, 2}), Error);
}

TEST_CASE("FFT matches the dense DFT for power-of-two and other lengths") {
  Rng rng = Rng::derive(3, Stream::Test);
  for (std::size_t n : {1u, 2u, 3u, 5u, 6u, 7u, 8u, 12u, 31u, 64u, 100u}) {
    CAPTURE(n);
    const ComplexVec x = random_vec(n, rng);
    ComplexVec y = x;
    FftPlan plan(n);
    plan.forward(y);
    CHECK(max_abs_diff(y, dft_matrix(n).apply(x)) < 1e-10 * static_cast<double>(n));
    ComplexVec z = x;
    plan.inverse(z);
    CHECK(max_abs_diff(z, dft_matrix(n, +1.0).apply(x)) < 1e-10 * static_cast<double>(n));
  }
}

TEST_CASE("dft2_apply against the dense Kronecker Q") {
  Rng rng = Rng::derive(4, Stream::Test);
  SUBCASE("e_0 maps to a constant") {
    ComplexVec e(32);
    e[0] = 1.0;
    const ComplexVec q = dft2_apply(e, {4, 8}, Direction::Forward);
    for (const auto& v : q) CHECK(std::abs(v - 1.0 / std::sqrt(32.0)) < 1e-14);
  }
  SUBCASE("dense oracle, shape 4x64") {
    const Shape2D s{4, 64};
    const ComplexMat q = dense_q(s);
    for (int t = 0; t < 20; ++t) {
      const ComplexVec x = random_vec(s.size(), rng);
      CHECK(max_abs_diff(dft2_apply(x, s, Direction::Forward), q.apply(x)) < 1e-10);
      CHECK(max_abs_diff(dft2_apply(x, s, Direction::Adjoint), q.apply_adjoint(x)) < 1e-10);
    }
  }
  SUBCASE("unitarity") {
    for (Shape2D s : {Shape2D{4, 8}, Shape2D{3, 5}, Shape2D{1, 7}}) {
      const ComplexVec x = random_vec(s.size(), rng);
      const ComplexVec y = dft2_apply(x, s, Direction::Forward);
      CHECK(std::abs(std::sqrt(norm2(y)) - std::sqrt(norm2(x))) < 1e-12 * std::sqrt(norm2(x)));
      CHECK(max_abs_diff(dft2_apply(y, s, Direction::Adjoint), x) < 1e-12);
    }
  }
  CHECK_THROWS_AS(dft2_apply(ComplexVec(5), {2, 2}, Direction::Forward), Error);
}

TEST_CASE("circular convolution against the direct double sum") {
  Rng rng = Rng::derive(5, Stream::Test);
  for (Shape2D s : {Shape2D{1, 1}, Shape2D{2, 2}, Shape2D{4, 8}, Shape2D{3, 5}}) {
    CAPTURE(s.n_rx);
    CAPTURE(s.n_tx);
    for (int t = 0; t < 100; ++t) {
      const RealVec k = random_real(s.size(), rng), x = random_real(s.size(), rng);
      const RealVec fast = circ_conv2(k, x, s);
      CHECK(max_abs_diff(fast, direct_conv(k, x, s)) < 1e-9);
      CHECK(max_abs_diff(fast, circ_conv2(x, k, s)) < 1e-10);
    }
  }
  const Shape2D s{4, 8};
  const RealVec x = random_real(32, rng);
  RealVec delta(32, 0.0);
  delta[0] = 1.0;
  CHECK(max_abs_diff(circ_conv2(delta, x, s), x) < 1e-12);
  double sum = 0.0;
  for (double v : x) sum += v;
  for (double v : circ_conv2(RealVec(32, 1.0), x, s)) CHECK(std::abs(v - sum) < 1e-12);

  const RealVec x2 = random_real(32, rng), k = random_real(32, rng);
  RealVec mix(32);
  for (std::size_t i = 0; i < 32; ++i) mix[i] = 2.0 * x[i] - 3.0 * x2[i];
  const RealVec lhs = circ_conv2(k, mix, s), a = circ_conv2(k, x, s), b = circ_conv2(k, x2, s);
  for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(lhs[i] - (2.0 * a[i] - 3.0 * b[i])) < 1e-10);
  CHECK_THROWS_AS(circ_conv2(RealVec(31), x, s), Error);
}

TEST_CASE("correlate is the adjoint of convolution") {
  Rng rng = Rng::derive(6, Stream::Test);
  const Shape2D s{4, 8};
  const CircConv2 conv(s);
  const RealVec k = random_real(32, rng), x = random_real(32, rng), g = random_real(32, rng);
  // <g, k * x> = <corr(g, k), x>
  const RealVec kx = conv.convolve(k, x);
  const RealVec adj = conv.correlate(conv.spectrum(k), g);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < 32; ++i) {
    lhs += g[i] * kx[i];
    rhs += adj[i] * x[i];
  }
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("circular reverse and shift") {
  const Shape2D s{2, 3};
  const RealVec x{0, 1, 2, 3, 4, 5};  // (r, t) -> t * 2 + r
  const RealVec rev = circular_reverse(x, s);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t t = 0; t < 3; ++t) CHECK(rev[t * 2 + r] == x[((3 - t) % 3) * 2 + (2 - r) % 2]);
  const RealVec sh = circular_shift(x, s, 1, 2);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t t = 0; t < 3; ++t) CHECK(sh[((t + 2) % 3) * 2 + (r + 1) % 2] == x[t * 2 + r]);
}

TEST_CASE("softmax") {
  CHECK(softmax(RealVec{0, 0}) == RealVec{0.5, 0.5});
  for (double c : {-3.0, 0.0, 700.0}) {
    for (double v : softmax(RealVec(4, c))) CHECK(std::abs(v - 0.25) < 1e-15);
  }
  const RealVec big = softmax(RealVec{1000, 1000.5}), small = softmax(RealVec{0, 0.5});
  CHECK(max_abs_diff(big, small) < 1e-15);
  CHECK(softmax(RealVec{}).empty());
  Rng rng = Rng::derive(7, Stream::Test);
  const RealVec v = random_real(50, rng, -20, 20);
  RealVec shifted = v;
  for (auto& e : shifted) e += 12.5;
  const RealVec p = softmax(v);
  double sum = 0.0;
  for (double e : p) {
    CHECK(e > 0.0);
    sum += e;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
  CHECK(max_abs_diff(p, softmax(shifted)) < 1e-12);
}

TEST_CASE("pinv_solve") {
  Rng rng = Rng::derive(8, Stream::Test);
  const ComplexVec y = random_vec(6, rng);
  CHECK(max_abs_diff(pinv_solve(ComplexMat::identity(6), y), y) < 1e-12);
  const ComplexMat f = unitary_dft(6);
  CHECK(max_abs_diff(pinv_solve(f, y), f.apply_adjoint(y)) < 1e-12);

  const ComplexMat a = random_mat(12, 8, rng);
  const ComplexVec h = random_vec(8, rng);
  CHECK(max_abs_diff(pinv_solve(a, a.apply(h)), h) < 1e-10);

  // Rank deficient: duplicated column. The minimum-norm solution splits the
  // weight evenly and leaves no component in the null space.
  ComplexMat d(4, 2);
  for (std::size_t i = 0; i < 4; ++i) d(i, 0) = d(i, 1) = cplx(static_cast<double>(i + 1), 0.0);
  const ComplexVec sol = pinv_solve(d, d.apply(ComplexVec{2.0, 0.0}));
  CHECK(std::abs(sol[0] - 1.0) < 1e-10);
  CHECK(std::abs(sol[1] - 1.0) < 1e-10);
}

TEST_CASE("Hermitian solve, log-det and eigenvalues") {
  Rng rng = Rng::derive(9, Stream::Test);
  const ComplexMat b = random_mat(5, 5, rng);
  const ComplexMat m = b * b.adjoint() + ComplexMat::identity(5);
  const ComplexMat rhs = random_mat(5, 2, rng);
  const ComplexMat x = hermitian_solve(m, rhs);
  CHECK(max_abs_diff(m * x, rhs) < 1e-10);

  const RealVec ev = hermitian_eigenvalues(m);
  double logdet = 0.0, trace = 0.0;
  for (double e : ev) logdet += std::log(e);
  for (std::size_t i = 0; i < 5; ++i) trace += m(i, i).real();
  double ev_sum = 0.0;
  for (double e : ev) ev_sum += e;
  CHECK(std::abs(ev_sum - trace) < 1e-10);
  CHECK(std::is_sorted(ev.begin(), ev.end()));
  CHECK(std::abs(hermitian_logdet(m) - logdet) < 1e-10);

  ComplexMat indefinite = ComplexMat::identity(2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(hermitian_solve(indefinite, ComplexMat::identity(2)), Error);
}
