#include "fdce/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fdce/kernels.hpp"
#include "fdce/parallel.hpp"

namespace fdce {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double laplace(Rng& rng, double stddev) {
  const double b = stddev / std::numbers::sqrt2;
  double u = rng.uniform() - 0.5;
  while (std::abs(u) >= 0.5) u = rng.uniform() - 0.5;
  return -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

}  // namespace

const char* to_string(LosMode m) noexcept {
  switch (m) {
    case LosMode::Mixed: return "mixed";
    case LosMode::LosOnly: return "los-only";
    case LosMode::NlosOnly: return "nlos-only";
  }
  return "?";
}

LosMode parse_los_mode(const std::string& s) {
  if (s == "mixed") return LosMode::Mixed;
  if (s == "los-only") return LosMode::LosOnly;
  if (s == "nlos-only") return LosMode::NlosOnly;
  fail(ErrorKind::Validation, "los_mode must be mixed|los-only|nlos-only, got '" + s + "'");
}

void validate(const ScenarioConfig& cfg) {
  std::vector<std::string> bad;
  if (cfg.n_rx < 1) bad.emplace_back("n_rx");
  if (cfg.n_tx < 1) bad.emplace_back("n_tx");
  if (!(cfg.f_ul > 0.0)) bad.emplace_back("f_ul");
  if (!(cfg.f_dl > 0.0) || cfg.f_dl == cfg.f_ul) bad.emplace_back("f_dl");
  if (!(cfg.los_probability >= 0.0 && cfg.los_probability <= 1.0)) bad.emplace_back("los_probability");
  if (cfg.l_los < 1) bad.emplace_back("l_los");
  if (cfg.l_nlos < 1) bad.emplace_back("l_nlos");
  if (!(cfg.angle_spread_deg > 0.0)) bad.emplace_back("angle_spread_deg");
  if (!(cfg.delay_spread_s > 0.0)) bad.emplace_back("delay_spread_s");
  if (!(cfg.power_decay >= 0.0)) bad.emplace_back("power_decay");
  if (!(cfg.element_spacing > 0.0)) bad.emplace_back("element_spacing");
  if (!(cfg.los_power_fraction > 0.0 && cfg.los_power_fraction < 1.0)) bad.emplace_back("los_power_fraction");
  if (!(cfg.sector_deg > 0.0 && cfg.sector_deg <= 360.0)) bad.emplace_back("sector_deg");
  if (!bad.empty()) {
    std::string msg = "invalid scenario fields:";
    for (const auto& b : bad) msg += " " + b;
    fail(ErrorKind::Validation, msg);
  }
}

PropagationScene sample_scene(const ScenarioConfig& cfg, Rng& rng) {
  PropagationScene scene;
  switch (cfg.los_mode) {
    case LosMode::LosOnly: scene.is_los = true; break;
    case LosMode::NlosOnly: scene.is_los = false; break;
    case LosMode::Mixed: scene.is_los = rng.uniform() < cfg.los_probability; break;
  }
  const double half = 0.5 * cfg.sector_deg;
  scene.cluster_center_aod_deg = rng.uniform(-half, half);
  scene.cluster_center_aoa_deg = rng.uniform(-half, half);

  const std::size_t n_paths = scene.is_los ? cfg.l_los : cfg.l_nlos;
  scene.paths.resize(n_paths);
  for (std::size_t l = 0; l < n_paths; ++l) {
    PathParams& p = scene.paths[l];
    if (scene.is_los && l == 0) {
      p.aod_deg = scene.cluster_center_aod_deg;
      p.aoa_deg = scene.cluster_center_aoa_deg;
      p.delay_s = 0.0;
      continue;
    }
    p.aod_deg = scene.cluster_center_aod_deg + laplace(rng, cfg.angle_spread_deg);
    p.aoa_deg = scene.cluster_center_aoa_deg + laplace(rng, cfg.angle_spread_deg);
    p.delay_s = rng.exponential(cfg.delay_spread_s);
  }

  // Exponential power-delay profile over the scattered paths.
  const std::size_t first_scattered = scene.is_los ? 1 : 0;
  double scattered = 0.0;
  for (std::size_t l = first_scattered; l < n_paths; ++l) {
    scene.paths[l].power = std::exp(-cfg.power_decay * scene.paths[l].delay_s / cfg.delay_spread_s);
    scattered += scene.paths[l].power;
  }
  const double scattered_share = (scene.is_los && n_paths > 1) ? 1.0 - cfg.los_power_fraction : 1.0;
  if (scene.is_los) scene.paths[0].power = n_paths > 1 ? cfg.los_power_fraction : 1.0;
  if (scattered > 0.0) {
    for (std::size_t l = first_scattered; l < n_paths; ++l) scene.paths[l].power *= scattered_share / scattered;
  }
  // Renormalize so the sum is 1 to rounding.
  const double total = std::accumulate(scene.paths.begin(), scene.paths.end(), 0.0,
                                       [](double s, const PathParams& p) { return s + p.power; });
  for (auto& p : scene.paths) p.power /= total;
  return scene;
}

ComplexVec ula_steering(double angle_deg, std::size_t n, double spacing) {
  ComplexVec a(n);
  const double phase = 2.0 * std::numbers::pi * spacing * std::sin(angle_deg * kDeg);
  for (std::size_t k = 0; k < n; ++k) a[k] = std::polar(1.0, phase * static_cast<double>(k));
  return a;
}

ComplexMat synthesize_channel(const PropagationScene& scene, double f_c, const Shape2D& shape,
                              const ScenarioConfig& cfg, Rng& rng, Link link) {
  validate(shape);
  if (scene.paths.empty()) fail(ErrorKind::InvalidDimension, "scene has no paths");
  const Shape2D expected = link == Link::Downlink ? cfg.dl_shape() : cfg.ul_shape();
  if (!(shape == expected)) fail(ErrorKind::InvalidDimension, "channel shape does not match scenario and link");

  ComplexMat h(shape.n_rx, shape.n_tx);
  for (std::size_t l = 0; l < scene.paths.size(); ++l) {
    const PathParams& p = scene.paths[l];
    const double rx_angle = link == Link::Downlink ? p.aoa_deg : p.aod_deg;
    const double tx_angle = link == Link::Downlink ? p.aod_deg : p.aoa_deg;
    const ComplexVec a_rx = ula_steering(rx_angle, shape.n_rx, cfg.element_spacing);
    const ComplexVec a_tx = ula_steering(tx_angle, shape.n_tx, cfg.element_spacing);
    // f_c * tau can be ~1e4 cycles; reduce before forming the phasor.
    const double cycles = f_c * p.delay_s;
    const double frac = cycles - std::floor(cycles);
    // The LOS path keeps its amplitude and only gets a random phase (Ricean).
    const cplx draw = scene.is_los && l == 0 ? std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform()) : rng.complex_normal();
    const cplx g = std::sqrt(p.power) * draw * std::polar(1.0, -2.0 * std::numbers::pi * frac);
    for (std::size_t t = 0; t < shape.n_tx; ++t) {
      const cplx s = g * a_tx[t];
      kernels::axpy(s, a_rx, h.col(t));
    }
  }
  return h;
}

const char* to_string(DomainTag d) noexcept {
  switch (d) {
    case DomainTag::Ul: return "ul";
    case DomainTag::UlTransposed: return "ul-transposed";
    case DomainTag::Dl: return "dl";
    case DomainTag::Gauss: return "gauss";
  }
  return "?";
}

const char* to_string(SplitTag s) noexcept {
  switch (s) {
    case SplitTag::Cov: return "cov";
    case SplitTag::Train: return "train";
    case SplitTag::Test: return "test";
  }
  return "?";
}

DomainTag parse_domain_tag(const std::string& s) {
  if (s == "ul") return DomainTag::Ul;
  if (s == "ul-transposed") return DomainTag::UlTransposed;
  if (s == "dl") return DomainTag::Dl;
  if (s == "gauss") return DomainTag::Gauss;
  fail(ErrorKind::Parse, "unknown domain tag '" + s + "'");
}

SplitTag parse_split_tag(const std::string& s) {
  if (s == "cov") return SplitTag::Cov;
  if (s == "train") return SplitTag::Train;
  if (s == "test") return SplitTag::Test;
  fail(ErrorKind::Parse, "unknown split tag '" + s + "'");
}

double Dataset::mean_power() const {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& smp : samples) s += kernels::sq_norm(smp.h);
  return s / static_cast<double>(samples.size());
}

double Dataset::los_fraction() const {
  if (samples.empty()) return 0.0;
  const auto n = std::count_if(samples.begin(), samples.end(), [](const ChannelSample& s) { return s.is_los; });
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

Dataset normalize_dataset(Dataset d) {
  if (d.samples.empty()) fail(ErrorKind::DegenerateData, "cannot normalize an empty dataset");
  const double mean = d.mean_power();
  if (!(mean > 0.0) || !std::isfinite(mean)) fail(ErrorKind::DegenerateData, "dataset has zero or non-finite power");
  const double scale = std::sqrt(static_cast<double>(d.shape.size()) / mean);
  for (auto& s : d.samples)
    for (auto& v : s.h) v *= scale;
  d.normalization_scale *= scale;
  return d;
}

ComplexMat global_sample_cov(const Dataset& d) {
  if (d.samples.empty()) fail(ErrorKind::DegenerateData, "sample covariance of an empty dataset");
  const std::size_t n = d.shape.size();
  ComplexMat c(n, n);
  for (const auto& s : d.samples) {
    if (s.h.size() != n) fail(ErrorKind::InvalidDimension, "sample length does not match dataset shape");
    for (std::size_t j = 0; j < n; ++j) kernels::axpy(std::conj(s.h[j]), s.h, c.col(j));
  }
  const double inv = 1.0 / static_cast<double>(d.samples.size());
  // Average the two triangles so the result is exactly Hermitian.
  for (std::size_t j = 0; j < n; ++j) {
    c(j, j) = {c(j, j).real() * inv, 0.0};
    for (std::size_t i = j + 1; i < n; ++i) {
      const cplx v = 0.5 * (c(i, j) + std::conj(c(j, i))) * inv;
      c(i, j) = v;
      c(j, i) = std::conj(v);
    }
  }
  return c;
}

Dataset generate_gaussian_dataset(const Shape2D& shape, std::size_t n, std::uint64_t seed, SplitTag split) {
  validate(shape);
  if (n == 0) fail(ErrorKind::DegenerateData, "Gaussian dataset needs at least one sample");
  Dataset d;
  d.shape = shape;
  d.domain_tag = DomainTag::Gauss;
  d.split_tag = split;
  d.seed = seed;
  d.samples.resize(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = Rng::derive(seed, Stream::Gauss, {static_cast<std::uint64_t>(split), i});
    ChannelSample& s = d.samples[i];
    s.h.resize(shape.size());
    for (auto& v : s.h) v = rng.complex_normal();
    s.scene_id = static_cast<std::uint32_t>(i);
  });
  return normalize_dataset(std::move(d));
}

const Dataset& PairedDatasets::get(DomainTag domain, SplitTag split) const {
  const auto idx = static_cast<std::size_t>(split);
  switch (domain) {
    case DomainTag::Ul: return ul[idx];
    case DomainTag::UlTransposed: return ul_transposed[idx];
    case DomainTag::Dl: return dl[idx];
    case DomainTag::Gauss: break;
  }
  fail(ErrorKind::Configuration, "paired datasets hold no Gaussian split");
}

PairedDatasets generate_paired_datasets(const ScenarioConfig& cfg, std::size_t n_cov, std::size_t n_train,
                                        std::size_t n_test) {
  validate(cfg);
  if (n_cov == 0 || n_train == 0 || n_test == 0) fail(ErrorKind::Validation, "split counts must be >= 1");
  const std::size_t total = n_cov + n_train + n_test;
  const Shape2D dl_shape = cfg.dl_shape();
  const Shape2D ul_shape = cfg.ul_shape();

  std::vector<ChannelSample> ul(total), ult(total), dl(total);
  parallel_for(total, [&](std::size_t i) {
    Rng scene_rng = Rng::derive(cfg.seed, Stream::Scene, {i});
    const PropagationScene scene = sample_scene(cfg, scene_rng);
    Rng ul_rng = Rng::derive(cfg.seed, Stream::GainsUl, {i});
    Rng dl_rng = Rng::derive(cfg.seed, Stream::GainsDl, {i});
    const ComplexMat h_ul = synthesize_channel(scene, cfg.f_ul, ul_shape, cfg, ul_rng, Link::Uplink);
    const ComplexMat h_dl = synthesize_channel(scene, cfg.f_dl, dl_shape, cfg, dl_rng, Link::Downlink);
    const auto id = static_cast<std::uint32_t>(i);
    ul[i] = {vec(h_ul), id, scene.is_los};
    ult[i] = {vec(h_ul.transpose()), id, scene.is_los};
    dl[i] = {vec(h_dl), id, scene.is_los};
  });

  const std::array<std::size_t, 4> bounds{0, n_cov, n_cov + n_train, total};
  auto make = [&](const std::vector<ChannelSample>& all, std::size_t split, DomainTag tag, const Shape2D& shape,
                  double carrier) {
    Dataset d;
    d.shape = shape;
    d.domain_tag = tag;
    d.split_tag = static_cast<SplitTag>(split);
    d.carrier = carrier;
    d.seed = cfg.seed;
    d.samples.assign(all.begin() + static_cast<std::ptrdiff_t>(bounds[split]),
                     all.begin() + static_cast<std::ptrdiff_t>(bounds[split + 1]));
    return normalize_dataset(std::move(d));
  };

  PairedDatasets out;
  for (std::size_t s = 0; s < 3; ++s) {
    out.ul[s] = make(ul, s, DomainTag::Ul, ul_shape, cfg.f_ul);
    out.ul_transposed[s] = make(ult, s, DomainTag::UlTransposed, dl_shape, cfg.f_ul);
    out.dl[s] = make(dl, s, DomainTag::Dl, dl_shape, cfg.f_dl);
  }
  return out;
}

}  // namespace fdce
