#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fdce/channel_sim.hpp"
#include "fdce/kernels.hpp"
#include "test_helpers.hpp"

using namespace fdce;

namespace {

ScenarioConfig desk_cfg(LosMode mode = LosMode::Mixed) {
  ScenarioConfig c;
  c.los_mode = mode;
  return c;
}

double power_sum(const PropagationScene& s) {
  double p = 0.0;
  for (const auto& path : s.paths) p += path.power;
  return p;
}

}  // namespace

TEST_CASE("scene sampling") {
  SUBCASE("LOS-only has l_los paths") {
    ScenarioConfig c = desk_cfg(LosMode::LosOnly);
    Rng rng(1);
    const PropagationScene s = sample_scene(c, rng);
    CHECK(s.is_los);
    CHECK(s.paths.size() == 37);
    CHECK(std::abs(power_sum(s) - 1.0) < 1e-12);
    // The direct path carries the configured dominant share.
    CHECK(std::abs(s.paths[0].power - c.los_power_fraction) < 1e-12);
  }
  SUBCASE("NLOS-only has l_nlos paths") {
    Rng rng(2);
    const PropagationScene s = sample_scene(desk_cfg(LosMode::NlosOnly), rng);
    CHECK_FALSE(s.is_los);
    CHECK(s.paths.size() == 61);
    CHECK(std::abs(power_sum(s) - 1.0) < 1e-12);
    for (const auto& p : s.paths) CHECK(p.delay_s >= 0.0);
  }
  SUBCASE("deterministic and inside the sector") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng a(seed), b(seed);
      const PropagationScene s = sample_scene(desk_cfg(), a);
      CHECK(s == sample_scene(desk_cfg(), b));
      CHECK(std::abs(s.cluster_center_aod_deg) <= 60.0);
      CHECK(std::abs(s.cluster_center_aoa_deg) <= 60.0);
    }
  }
  SUBCASE("mixed mode draws LOS at the configured rate") {
    std::size_t los = 0;
    const std::size_t n = 4000;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = Rng::derive(3, Stream::Test, {i});
      los += sample_scene(desk_cfg(), rng).is_los ? 1 : 0;
    }
    // 0.3 +- 4 standard deviations
    CHECK(std::abs(static_cast<double>(los) / n - 0.3) < 4.0 * std::sqrt(0.21 / n));
  }
}

TEST_CASE("ULA steering vectors") {
  for (const auto& v : ula_steering(0.0, 5, 0.5)) CHECK(std::abs(v - 1.0) < 1e-15);
  const ComplexVec a = ula_steering(90.0, 2, 0.5);
  CHECK(std::abs(a[1] + 1.0) < 1e-12);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const ComplexVec v = ula_steering(rng.uniform(-90, 90), 7, 0.5);
    CHECK(std::abs(kernels::sq_norm(v) - 7.0) < 1e-12);
  }
}

TEST_CASE("channel synthesis") {
  ScenarioConfig c = desk_cfg(LosMode::LosOnly);
  SUBCASE("single broadside LOS path is a constant rank-one matrix") {
    PropagationScene s;
    s.is_los = true;
    s.paths = {PathParams{0.0, 0.0, 0.0, 1.0}};
    Rng rng(5);
    const ComplexMat h = synthesize_channel(s, c.f_dl, c.dl_shape(), c, rng);
    // Unit amplitude with a random common phase.
    for (const auto& v : h.data()) {
      CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
      CHECK(std::abs(v - h(0, 0)) < 1e-12);
    }
  }
  SUBCASE("rank is bounded by the path count") {
    PropagationScene s;
    s.paths = {PathParams{10, -20, 1e-7, 0.5}, PathParams{-30, 5, 3e-7, 0.5}};
    Rng rng(6);
    const ComplexMat h = synthesize_channel(s, c.f_dl, c.dl_shape(), c, rng);
    const RealVec ev = hermitian_eigenvalues(h * h.adjoint());
    for (std::size_t i = 0; i + 2 < ev.size(); ++i) CHECK(std::abs(ev[i]) < 1e-9 * ev.back());
  }
  SUBCASE("uplink shape must be the transpose") {
    Rng rng(7);
    const PropagationScene s = sample_scene(c, rng);
    CHECK_THROWS_AS(synthesize_channel(s, c.f_ul, c.dl_shape(), c, rng, Link::Uplink), Error);
  }
}

TEST_CASE("paired datasets share geometry but not instantaneous channels") {
  const ScenarioConfig c = desk_cfg();
  const PairedDatasets p = generate_paired_datasets(c, 200, 2000, 1000);
  const Dataset& dl = p.get(DomainTag::Dl, SplitTag::Train);
  const Dataset& ult = p.get(DomainTag::UlTransposed, SplitTag::Train);
  const Dataset& ul = p.get(DomainTag::Ul, SplitTag::Train);
  REQUIRE(dl.size() == 2000);
  CHECK(dl.shape == Shape2D{4, 8});
  CHECK(ul.shape == Shape2D{8, 4});
  CHECK(ult.shape == Shape2D{4, 8});

  SUBCASE("splits are disjoint by scene id and every domain is normalized") {
    std::set<std::uint32_t> ids;
    std::size_t total = 0;
    for (SplitTag s : {SplitTag::Cov, SplitTag::Train, SplitTag::Test}) {
      for (DomainTag d : {DomainTag::Ul, DomainTag::UlTransposed, DomainTag::Dl}) {
        const Dataset& ds = p.get(d, s);
        CHECK(ds.size() > 0);
        CHECK(std::abs(ds.mean_power() - 32.0) < 1e-9);
      }
      for (const auto& smp : p.get(DomainTag::Dl, s).samples) ids.insert(smp.scene_id);
      total += p.get(DomainTag::Dl, s).size();
    }
    CHECK(ids.size() == total);
  }

  SUBCASE("transposed UL is the transpose of UL up to the normalization ratio") {
    const double ratio = ult.normalization_scale / ul.normalization_scale;
    for (std::size_t i = 0; i < 20; ++i) {
      const ComplexMat raw = unvec(ul.samples[i].h, ul.shape).transpose();
      ComplexVec expect = vec(raw);
      for (auto& v : expect) v *= ratio;
      CHECK(max_abs_diff(expect, ult.samples[i].h) < 1e-12);
      CHECK(ult.samples[i].scene_id == dl.samples[i].scene_id);
      CHECK(ult.samples[i].is_los == dl.samples[i].is_los);
    }
  }

  SUBCASE("second moments agree within 15 percent") {
    for (std::size_t k = 0; k < 32; ++k) {
      double m_ul = 0.0, m_dl = 0.0;
      for (std::size_t i = 0; i < dl.size(); ++i) {
        m_ul += std::norm(ult.samples[i].h[k]);
        m_dl += std::norm(dl.samples[i].h[k]);
      }
      CHECK(std::abs(m_ul - m_dl) / m_dl < 0.15);
    }
  }

  SUBCASE("instantaneous channels differ") {
    double corr = 0.0;
    for (std::size_t i = 0; i < dl.size(); ++i) {
      const auto& a = ult.samples[i].h;
      const auto& b = dl.samples[i].h;
      corr += std::abs(kernels::dot_conj(a, b)) / std::sqrt(kernels::sq_norm(a) * kernels::sq_norm(b));
    }
    corr /= static_cast<double>(dl.size());
    MESSAGE("mean UL/DL correlation " << corr);
    CHECK(corr < 0.9);
  }

  SUBCASE("regeneration is bit identical") {
    const PairedDatasets q = generate_paired_datasets(c, 200, 2000, 1000);
    CHECK(q.get(DomainTag::Dl, SplitTag::Test) == p.get(DomainTag::Dl, SplitTag::Test));
  }
}

TEST_CASE("UL/DL per-entry variance profiles over 500 scenes") {
  // The profile is a property of the scene geometry; 20 gain draws per scene
  // and link keep the Monte-Carlo error well below the 10% tolerance.
  ScenarioConfig c = desk_cfg();
  RealVec v_ul(32, 0.0), v_dl(32, 0.0);
  double corr = 0.0;
  for (std::size_t i = 0; i < 500; ++i) {
    Rng srng = Rng::derive(9, Stream::Scene, {i});
    const PropagationScene s = sample_scene(c, srng);
    for (std::uint64_t r = 0; r < 20; ++r) {
      Rng g1 = Rng::derive(9, Stream::GainsUl, {i, r}), g2 = Rng::derive(9, Stream::GainsDl, {i, r});
      const ComplexVec hu = vec(synthesize_channel(s, c.f_ul, c.ul_shape(), c, g1, Link::Uplink).transpose());
      const ComplexVec hd = vec(synthesize_channel(s, c.f_dl, c.dl_shape(), c, g2));
      for (std::size_t k = 0; k < 32; ++k) {
        v_ul[k] += std::norm(hu[k]);
        v_dl[k] += std::norm(hd[k]);
      }
      if (r == 0) corr += std::abs(kernels::dot_conj(hu, hd)) / std::sqrt(kernels::sq_norm(hu) * kernels::sq_norm(hd));
    }
  }
  CHECK(corr / 500.0 < 0.9);
  for (std::size_t k = 0; k < 32; ++k) CHECK(std::abs(v_ul[k] - v_dl[k]) / v_dl[k] < 0.10);
}

TEST_CASE("normalization") {
  Dataset d;
  d.shape = {2, 2};
  d.samples = {{ComplexVec{2.0, 2.0, 0.0, 0.0}, 0, false}};  // ||h||^2 = 8
  const Dataset n = normalize_dataset(d);
  CHECK(std::abs(n.normalization_scale - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(n.mean_power() - 4.0) < 1e-12);
  CHECK(std::abs(normalize_dataset(n).normalization_scale / n.normalization_scale - 1.0) < 1e-12);

  Dataset zero = d;
  zero.samples[0].h.assign(4, 0.0);
  CHECK_THROWS_AS(normalize_dataset(zero), Error);
  CHECK_THROWS_AS(normalize_dataset(Dataset{}), Error);
}

TEST_CASE("global sample covariance") {
  Dataset one;
  one.shape = {1, 2};
  one.samples = {{ComplexVec{{1, 1}, {0, 2}}, 0, false}};
  const ComplexMat c1 = global_sample_cov(one);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(c1(i, j) - one.samples[0].h[i] * std::conj(one.samples[0].h[j])) < 1e-15);

  const PairedDatasets p = generate_paired_datasets(desk_cfg(), 200, 1, 1);
  const ComplexMat c = global_sample_cov(p.get(DomainTag::Dl, SplitTag::Cov));
  CHECK(max_abs_diff(c, c.adjoint()) < 1e-12);
  double tr = 0.0;
  for (std::size_t i = 0; i < 32; ++i) tr += c(i, i).real();
  CHECK(std::abs(tr - 32.0) < 1e-9);
  for (double e : hermitian_eigenvalues(c)) CHECK(e > -1e-10);
  CHECK_THROWS_AS(global_sample_cov(Dataset{}), Error);
}

TEST_CASE("LOS covariance is more concentrated than NLOS") {
  auto top_fraction = [](LosMode mode) {
    ScenarioConfig c = desk_cfg(mode);
    const PairedDatasets p = generate_paired_datasets(c, 200, 1, 1);
    const RealVec ev = hermitian_eigenvalues(global_sample_cov(p.get(DomainTag::Dl, SplitTag::Cov)));
    double sum = 0.0;
    for (double e : ev) sum += e;
    return ev.back() / sum;
  };
  const double los = top_fraction(LosMode::LosOnly), nlos = top_fraction(LosMode::NlosOnly);
  MESSAGE("top eigenvalue fraction LOS " << los << " NLOS " << nlos);
  CHECK(los > nlos);
}

TEST_CASE("Gaussian datasets") {
  const Dataset d = generate_gaussian_dataset({2, 2}, 100000, 3);
  CHECK(d.domain_tag == DomainTag::Gauss);
  CHECK(std::abs(d.mean_power() - 4.0) < 1e-9);
  const ComplexMat c = global_sample_cov(d);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(c(i, j) - cplx(i == j ? 1.0 : 0.0)) < 0.05);
  CHECK(generate_gaussian_dataset({2, 2}, 50, 3) == generate_gaussian_dataset({2, 2}, 50, 3));
}

TEST_CASE("scenario validation names every bad field") {
  ScenarioConfig c;
  c.f_dl = c.f_ul;
  c.los_probability = 2.0;
  try {
    validate(c);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    const std::string msg = e.what();
    CHECK(msg.find("f_dl") != std::string::npos);
    CHECK(msg.find("los_probability") != std::string::npos);
  }
}
