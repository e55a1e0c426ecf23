#pragma once

// One JSON file describes a whole run: scenario, pilots, dataset sizes,
// training, evaluation and where artifacts live. Keys may be overridden with
// dotted paths (train.epochs=20).

#include <filesystem>
#include <string>
#include <vector>

#include "fdce/channel_sim.hpp"
#include "fdce/cnn.hpp"
#include "fdce/eval.hpp"

namespace fdce {

struct SplitCounts {
  std::size_t n_cov = 1000;
  std::size_t n_train = 20000;
  std::size_t n_test = 10000;
};

inline constexpr SplitCounts kDeskScale{200, 2000, 1000};

struct EvalConfig {
  RealVec snr_grid{-15, -10, -5, 0, 5, 10, 15, 20};
  double fixed_snr_db = 5.0;
  std::uint64_t seed = 7;
  std::vector<std::string> extra_methods;
  std::size_t omp_oversampling_rx = 2;
  std::size_t omp_oversampling_tx = 2;
  std::size_t omp_k_max = 0;  // 0: n_rx * n_tx / 2
  std::size_t grid_points = 16;
  NmseConvention convention = NmseConvention::Dataset;
};

struct PathConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "reports";
};

struct RunConfig {
  ScenarioConfig scenario;
  std::size_t n_pilots = 0;  // 0: n_tx (full pilots)
  SplitCounts counts;
  bool desk_scale = false;
  bool gauss = true;  // also generate the i.i.d. Gaussian training set
  TrainConfig train;
  bool shared_snr_models = false;
  EvalConfig eval;
  PathConfig paths;

  SplitCounts effective_counts() const { return desk_scale ? kDeskScale : counts; }
  PilotConfig pilot() const;
};

/// Throws Validation naming every offending key.
void validate(const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);

/// Parses the config text after applying key=value overrides (values are
/// read as JSON when possible, else as strings). Relative paths are resolved
/// against base_dir.
RunConfig run_config_from_json(const std::string& text, const std::vector<std::string>& overrides = {},
                               const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Scenario variant used for a named dataset family (mixed, los).
ScenarioConfig scenario_for(const RunConfig& cfg, const std::string& family);

}  // namespace fdce
