#pragma once

// Geometry-shared UL/DL channel synthesis.
//
// A scene (one per user position) fixes the multipath geometry: a single
// cluster with per-path angles, delays and powers. UL and DL channels are
// synthesized from the same scene at their own carrier frequency; only the
// small-scale complex gains are redrawn per link.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fdce/numerics.hpp"
#include "fdce/rng.hpp"

namespace fdce {

enum class LosMode { Mixed, LosOnly, NlosOnly };

struct ScenarioConfig {
  std::size_t n_rx = 4;  // MT antennas
  std::size_t n_tx = 8;  // BS antennas
  double f_ul = 2.53e9;
  double f_dl = 2.73e9;
  LosMode los_mode = LosMode::Mixed;
  double los_probability = 0.3;
  std::size_t l_los = 37;
  std::size_t l_nlos = 61;
  double angle_spread_deg = 10.0;
  double delay_spread_s = 1e-6;
  double power_decay = 1.0;        // per delay-spread unit
  double element_spacing = 0.5;    // wavelengths at each link's own carrier
  double los_power_fraction = 0.6;
  double sector_deg = 120.0;
  std::uint64_t seed = 1;

  Shape2D dl_shape() const { return {n_rx, n_tx}; }
  Shape2D ul_shape() const { return {n_tx, n_rx}; }
};

/// Throws Validation listing every offending field.
void validate(const ScenarioConfig& cfg);

const char* to_string(LosMode m) noexcept;
LosMode parse_los_mode(const std::string& s);

struct PathParams {
  double aod_deg = 0.0;
  double aoa_deg = 0.0;
  double delay_s = 0.0;
  double power = 0.0;
  bool operator==(const PathParams&) const = default;
};

struct PropagationScene {
  bool is_los = false;
  double cluster_center_aod_deg = 0.0;
  double cluster_center_aoa_deg = 0.0;
  std::vector<PathParams> paths;

  bool operator==(const PropagationScene&) const = default;
};

PropagationScene sample_scene(const ScenarioConfig& cfg, Rng& rng);

/// ULA response, entry k = exp(j 2 pi spacing k sin(angle)).
ComplexVec ula_steering(double angle_deg, std::size_t n, double spacing);

enum class Link { Downlink, Uplink };

/// Sum of rank-one path contributions with gains sqrt(power) times a
/// CN(0, 1) draw; the first path of a LOS scene gets unit amplitude and a
/// uniform phase instead. Downlink: rows are MT antennas (AoA),
/// columns BS antennas (AoD). Uplink swaps the roles, so the shape must be
/// {n_tx, n_rx} of the scenario.
ComplexMat synthesize_channel(const PropagationScene& scene, double f_c, const Shape2D& shape,
                              const ScenarioConfig& cfg, Rng& rng, Link link = Link::Downlink);

enum class DomainTag : std::uint8_t { Ul = 0, UlTransposed = 1, Dl = 2, Gauss = 3 };
enum class SplitTag : std::uint8_t { Cov = 0, Train = 1, Test = 2 };

const char* to_string(DomainTag d) noexcept;
const char* to_string(SplitTag s) noexcept;
DomainTag parse_domain_tag(const std::string& s);
SplitTag parse_split_tag(const std::string& s);

struct ChannelSample {
  ComplexVec h;
  std::uint32_t scene_id = 0;
  bool is_los = false;

  bool operator==(const ChannelSample&) const = default;
};

struct Dataset {
  std::vector<ChannelSample> samples;
  Shape2D shape;
  DomainTag domain_tag = DomainTag::Dl;
  SplitTag split_tag = SplitTag::Train;
  double normalization_scale = 1.0;
  double carrier = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double mean_power() const;
  double los_fraction() const;

  bool operator==(const Dataset&) const = default;
};

/// Scales all samples by one scalar so that mean ||h||^2 = n_rx * n_tx. The
/// applied factor is multiplied into normalization_scale.
Dataset normalize_dataset(Dataset d);

/// (1/M) sum h_i h_i^H, Hermitian by construction.
ComplexMat global_sample_cov(const Dataset& d);

Dataset generate_gaussian_dataset(const Shape2D& shape, std::size_t n, std::uint64_t seed,
                                  SplitTag split = SplitTag::Train);

struct PairedDatasets {
  // indexed by SplitTag
  std::array<Dataset, 3> ul;
  std::array<Dataset, 3> ul_transposed;
  std::array<Dataset, 3> dl;

  const Dataset& get(DomainTag domain, SplitTag split) const;
};

/// Sample index i (0-based over cov, train, test in that order) uses scene
/// i, drawn from its own generator derived from (seed, i).
PairedDatasets generate_paired_datasets(const ScenarioConfig& cfg, std::size_t n_cov, std::size_t n_train,
                                        std::size_t n_test);

}  // namespace fdce
