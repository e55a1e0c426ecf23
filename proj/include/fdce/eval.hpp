#pragma once

// Monte-Carlo evaluation: per-sample NMSE, SNR sweeps over a method set with
// paired observations, distribution statistics and the figure experiments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdce/baselines.hpp"
#include "fdce/channel_sim.hpp"
#include "fdce/cnn.hpp"
#include "fdce/mmse_grid.hpp"

namespace fdce {

/// ||h - h_hat||^2 / ||h||^2.
double nmse(std::span<const cplx> h_hat, std::span<const cplx> h);

/// How a sweep aggregates errors into one number per SNR.
///   Dataset:   sum ||h - h_hat||^2 / sum ||h||^2
///   PerSample: mean of the per-sample NMSE
enum class NmseConvention { Dataset, PerSample };

const char* to_string(NmseConvention c) noexcept;
NmseConvention parse_nmse_convention(const std::string& s);

double nmse_db(double nmse);

struct BoxplotStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0, mean = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;
  RealVec outliers;
};

/// Quantile of sorted data by linear interpolation at position q (n - 1).
double quantile_sorted(std::span<const double> sorted, double q);
BoxplotStats boxplot_stats(std::span<const double> samples);

/// (value, fraction <= value) at each distinct sorted value.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples);

// ---------------------------------------------------------------------------
// Methods

inline constexpr const char* kMethodNames[] = {
    "ls",           "lmmse-dl",       "lmmse-ul",       "ml",
    "genie-omp",    "gridded",        "structured",     "cnn-relu-dl",
    "cnn-relu-ul",  "cnn-softmax-dl", "cnn-softmax-ul", "cnn-relu-gauss",
    "cnn-softmax-gauss", "cnn-relu-mixed", "cnn-softmax-mixed",
};

bool is_method(const std::string& name);
bool is_cnn_method(const std::string& name);

enum class Figure { Fig2, Fig3, Fig4 };

const char* to_string(Figure f) noexcept;
Figure parse_figure(const std::string& s);

/// Legend label used as CSV column name.
std::string method_label(const std::string& method, Figure figure);

/// Methods of a figure in legend order.
std::vector<std::string> figure_methods(Figure figure);

struct SweepResources {
  std::optional<ComplexMat> c_dl;  // global sample covariances
  std::optional<ComplexMat> c_ul;
  std::size_t omp_oversampling_rx = 2;
  std::size_t omp_oversampling_tx = 2;
  std::size_t omp_k_max = 0;  // 0: n_rx * n_tx / 2
  std::size_t grid_points = 16;
  SpectrumModel spectrum;
  /// Per method either one model per SNR grid point or a single shared one.
  std::map<std::string, std::vector<CnnParams>> cnn_models;
};

struct SweepSpec {
  std::vector<std::string> methods;
  RealVec snr_grid;
  const Dataset* test = nullptr;
  std::uint64_t seed = 1;
  std::size_t n_pilots = 0;  // 0: full pilots
  NmseConvention convention = NmseConvention::Dataset;
  /// SNR values whose per-sample NMSE lists are kept in the report.
  RealVec keep_samples_at;
  SweepResources resources;
};

struct MethodResult {
  RealVec mean_nmse;                          // one per SNR grid point
  std::map<std::size_t, RealVec> per_sample;  // keyed by SNR grid index
};

struct EvalReport {
  RealVec snr_grid;
  std::vector<std::string> methods;
  std::vector<MethodResult> results;  // aligned with methods
  std::vector<std::string> observation_digests;  // SHA-256 of all y per SNR
  NmseConvention convention = NmseConvention::Dataset;

  const MethodResult& at(const std::string& method) const;
};

/// Observation of test sample idx at SNR grid index k; every method sees it.
ComplexVec paired_observation(std::span<const cplx> h, const EstimatorContext& ctx, std::uint64_t seed,
                              std::size_t snr_index, std::size_t idx);

EvalReport snr_sweep(const SweepSpec& spec);

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

std::string sweep_csv(const EvalReport& report, Figure figure);
std::string samples_csv(const EvalReport& report, std::size_t snr_index, Figure figure);
std::string boxplot_csv(const EvalReport& report, std::size_t snr_index, Figure figure);
std::string cdf_csv(const EvalReport& report, std::size_t snr_index, Figure figure);

// ---------------------------------------------------------------------------
// On-disk layout shared by the CLI verbs.

/// data_dir/<scenario>/<domain>_<split>.fdce, scenario in {mixed, los, gauss}.
std::filesystem::path dataset_path(const std::filesystem::path& data_dir, const std::string& scenario,
                                   DomainTag domain, SplitTag split);
/// model_dir/<scenario>/<activation>-<domain>-snr<snr>.json, or -shared.json.
std::filesystem::path model_path(const std::filesystem::path& model_dir, const std::string& scenario, Activation act,
                                 const std::string& domain, std::optional<double> snr_db);

struct ExperimentPlan {
  Figure figure = Figure::Fig2;
  RealVec snr_grid;
  double fixed_snr_db = 5.0;
  std::vector<std::string> extra_methods;  // e.g. gridded, structured
  std::filesystem::path data_dir, model_dir, report_dir;
  std::uint64_t seed = 1;
  std::size_t n_pilots = 0;
  bool shared_snr_models = false;
  NmseConvention convention = NmseConvention::Dataset;
  SweepResources resources;  // models and covariances are filled from disk
  std::string config_json;   // echoed into the manifest
};

struct ExperimentResult {
  EvalReport report;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> check_failures;  // empty when all self-checks pass
};

/// Loads datasets and models, runs the sweep, writes CSVs and the manifest.
ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Invariant checks on a finished report (finite, nonnegative, LS oracle).
std::vector<std::string> self_check(const EvalReport& report);

}  // namespace fdce
