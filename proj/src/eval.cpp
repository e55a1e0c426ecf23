#include "fdce/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "fdce/dataset_io.hpp"
#include "fdce/kernels.hpp"
#include "fdce/parallel.hpp"

namespace fdce {

double nmse(std::span<const cplx> h_hat, std::span<const cplx> h) {
  if (h_hat.size() != h.size()) fail(ErrorKind::InvalidDimension, "nmse: length mismatch");
  const double p = kernels::sq_norm(h);
  if (!(p > 0.0)) fail(ErrorKind::DegenerateData, "nmse: reference channel is zero");
  return kernels::sq_dist(h_hat, h) / p;
}

const char* to_string(NmseConvention c) noexcept { return c == NmseConvention::Dataset ? "dataset" : "per-sample"; }

NmseConvention parse_nmse_convention(const std::string& s) {
  if (s == "dataset") return NmseConvention::Dataset;
  if (s == "per-sample") return NmseConvention::PerSample;
  fail(ErrorKind::Validation, "unknown NMSE convention '" + s + "' (expected dataset|per-sample)");
}

double nmse_db(double v) { return 10.0 * std::log10(v); }

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::DegenerateData, "quantile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorKind::DegenerateData, "boxplot of an empty list");
  RealVec s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  BoxplotStats b;
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  b.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  bool have_low = false;
  for (double v : s) {
    if (v < lo || v > hi) {
      b.outliers.push_back(v);
      continue;
    }
    if (!have_low) {
      b.whisker_low = v;
      have_low = true;
    }
    b.whisker_high = v;
  }
  return b;
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples) {
  if (samples.empty()) fail(ErrorKind::DegenerateData, "CDF of an empty list");
  RealVec s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i + 1] == s[i]) continue;
    out.emplace_back(s[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

// ---------------------------------------------------------------------------

bool is_method(const std::string& name) {
  return std::any_of(std::begin(kMethodNames), std::end(kMethodNames), [&](const char* m) { return name == m; });
}

bool is_cnn_method(const std::string& name) { return name.rfind("cnn-", 0) == 0 && is_method(name); }

const char* to_string(Figure f) noexcept {
  switch (f) {
    case Figure::Fig2: return "fig2";
    case Figure::Fig3: return "fig3";
    case Figure::Fig4: return "fig4";
  }
  return "?";
}

Figure parse_figure(const std::string& s) {
  if (s == "fig2") return Figure::Fig2;
  if (s == "fig3") return Figure::Fig3;
  if (s == "fig4") return Figure::Fig4;
  fail(ErrorKind::Validation, "unknown figure '" + s + "' (expected fig2|fig3|fig4)");
}

std::string method_label(const std::string& method, Figure figure) {
  static const std::map<std::string, std::string> labels{
      {"ls", "LS"},
      {"lmmse-dl", "LMMSE DL"},
      {"lmmse-ul", "LMMSE UL"},
      {"ml", "ML"},
      {"genie-omp", "genie OMP"},
      {"gridded", "gridded"},
      {"structured", "structured"},
      {"cnn-relu-dl", "ReLU DL"},
      {"cnn-relu-ul", "ReLU UL"},
      {"cnn-softmax-dl", "softmax DL"},
      {"cnn-softmax-ul", "softmax UL"},
      {"cnn-relu-gauss", "ReLU Gauss"},
      {"cnn-softmax-gauss", "softmax Gauss"},
      {"cnn-relu-mixed", "ReLU mixed"},
      {"cnn-softmax-mixed", "softmax mixed"},
  };
  const auto it = labels.find(method);
  if (it == labels.end()) fail(ErrorKind::Validation, "unknown method '" + method + "'");
  // The distribution figure's legend calls the DL-trained softmax plain "softmax".
  if (figure == Figure::Fig3 && method == "cnn-softmax-dl") return "softmax";
  return it->second;
}

std::vector<std::string> figure_methods(Figure figure) {
  switch (figure) {
    case Figure::Fig2:
      return {"lmmse-dl",    "lmmse-ul",       "ls",          "genie-omp",      "ml",           "cnn-softmax-dl",
              "cnn-relu-dl", "cnn-softmax-ul", "cnn-relu-ul", "cnn-softmax-gauss", "cnn-relu-gauss"};
    case Figure::Fig3:
      return {"cnn-relu-dl", "cnn-relu-ul", "cnn-softmax-dl", "cnn-softmax-ul", "lmmse-dl",
              "lmmse-ul",    "ml",          "genie-omp",      "ls"};
    case Figure::Fig4:
      return {"lmmse-dl",    "lmmse-ul",       "ls",          "genie-omp",      "ml",           "cnn-softmax-dl",
              "cnn-relu-dl", "cnn-softmax-ul", "cnn-relu-ul", "cnn-softmax-mixed", "cnn-relu-mixed"};
  }
  return {};
}

const MethodResult& EvalReport::at(const std::string& method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) fail(ErrorKind::Configuration, "method '" + method + "' is not in the report");
  return results[static_cast<std::size_t>(it - methods.begin())];
}

ComplexVec paired_observation(std::span<const cplx> h, const EstimatorContext& ctx, std::uint64_t seed,
                              std::size_t snr_index, std::size_t idx) {
  Rng rng = Rng::derive(seed, Stream::Noise, {snr_index, idx});
  return ctx.observe(h, rng);
}

namespace {

using EstimatorFn = std::function<ComplexVec(std::span<const cplx> y, std::span<const cplx> h)>;

const CnnParams& pick_model(const SweepResources& res, const std::string& method, std::size_t k, std::size_t n_snr) {
  const auto it = res.cnn_models.find(method);
  if (it == res.cnn_models.end() || it->second.empty()) {
    fail(ErrorKind::Configuration, "no trained model supplied for method '" + method + "'");
  }
  if (it->second.size() == 1) return it->second.front();
  if (it->second.size() != n_snr) {
    fail(ErrorKind::Configuration, "method '" + method + "' needs one model per SNR point or a single shared model");
  }
  return it->second[k];
}

std::string digest(const std::vector<ComplexVec>& ys) {
  std::string bytes;
  for (const auto& y : ys) {
    bytes.append(reinterpret_cast<const char*>(y.data()), y.size() * sizeof(cplx));
  }
  return sha256_hex(bytes);
}

}  // namespace

EvalReport snr_sweep(const SweepSpec& spec) {
  if (spec.test == nullptr || spec.test->samples.empty()) fail(ErrorKind::DegenerateData, "sweep needs a nonempty test set");
  if (spec.methods.empty()) fail(ErrorKind::Configuration, "sweep needs at least one method");
  if (spec.snr_grid.empty()) fail(ErrorKind::Configuration, "sweep needs at least one SNR point");
  for (const auto& m : spec.methods) {
    if (!is_method(m)) fail(ErrorKind::Validation, "unknown method '" + m + "'");
  }
  const Dataset& test = *spec.test;
  const Shape2D shape = test.shape;
  const std::size_t n = test.samples.size();
  const std::size_t n_snr = spec.snr_grid.size();
  const SweepResources& res = spec.resources;

  PilotConfig pilot = full_pilots(shape);
  if (spec.n_pilots != 0) pilot.n_p = spec.n_pilots;
  const EstimatorContext base(pilot, 1.0);

  auto has = [&](const char* m) { return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end(); };
  std::optional<GenieOmp> genie;
  std::size_t k_max = res.omp_k_max == 0 ? shape.size() / 2 : res.omp_k_max;
  if (has("genie-omp")) genie.emplace(base, build_dictionary(shape, res.omp_oversampling_rx, res.omp_oversampling_tx));
  std::optional<PriorGrid> grid;
  if (has("gridded") || has("structured")) grid = build_grid(shape, res.grid_points, base, res.spectrum).first;
  if (has("lmmse-dl") && !res.c_dl) fail(ErrorKind::Configuration, "lmmse-dl needs the DL global sample covariance");
  if (has("lmmse-ul") && !res.c_ul) fail(ErrorKind::Configuration, "lmmse-ul needs the UL global sample covariance");

  EvalReport report;
  report.snr_grid = spec.snr_grid;
  report.methods = spec.methods;
  report.convention = spec.convention;
  report.results.resize(spec.methods.size());
  for (auto& r : report.results) r.mean_nmse.resize(n_snr);

  RealVec power(n);
  for (std::size_t i = 0; i < n; ++i) {
    power[i] = kernels::sq_norm(test.samples[i].h);
    if (!(power[i] > 0.0)) fail(ErrorKind::DegenerateData, "test channel " + std::to_string(i) + " is zero");
  }

  for (std::size_t k = 0; k < n_snr; ++k) {
    const EstimatorContext ctx = base.with_sigma2(snr_to_sigma2(spec.snr_grid[k]));
    std::vector<EstimatorFn> fns;
    for (const auto& m : spec.methods) {
      if (m == "ls") {
        fns.push_back([ctx](auto y, auto) { return ls_estimate(y, ctx); });
      } else if (m == "lmmse-dl" || m == "lmmse-ul") {
        auto est = std::make_shared<LmmseEstimator>(m == "lmmse-dl" ? *res.c_dl : *res.c_ul, ctx);
        fns.push_back([est](auto y, auto) { return (*est)(y); });
      } else if (m == "ml") {
        fns.push_back([ctx](auto y, auto) { return ml_structured(y, ctx); });
      } else if (m == "genie-omp") {
        const GenieOmp* g = &*genie;
        fns.push_back([g, k_max](auto y, auto h) { return g->run(y, h, k_max).h_hat; });
      } else if (m == "gridded") {
        auto bank = std::make_shared<GriddedFilterBank>(filter_bank(*grid, ctx));
        fns.push_back([bank, ctx](auto y, auto) { return gridded_estimate(y, *bank, ctx); });
      } else if (m == "structured") {
        auto bank = std::make_shared<StructuredBank>(structured_from_grid(*grid, ctx));
        fns.push_back([bank, ctx](auto y, auto) { return structured_estimate(y, *bank, ctx); });
      } else {
        const CnnParams& p = pick_model(res, m, k, n_snr);
        if (!(p.shape == shape)) fail(ErrorKind::Configuration, "model for '" + m + "' has a different channel shape");
        auto model = std::make_shared<CnnModel>(p);
        fns.push_back([model, ctx](auto y, auto) { return model->estimate(y, ctx); });
      }
    }

    std::vector<ComplexVec> ys(n);
    std::vector<RealVec> err(spec.methods.size(), RealVec(n));
    parallel_for(n, [&](std::size_t i) {
      const ComplexVec& h = test.samples[i].h;
      ys[i] = paired_observation(h, ctx, spec.seed, k, i);
      for (std::size_t m = 0; m < fns.size(); ++m) err[m][i] = kernels::sq_dist(fns[m](ys[i], h), h);
    });
    report.observation_digests.push_back(digest(ys));

    const bool keep = std::find(spec.keep_samples_at.begin(), spec.keep_samples_at.end(), spec.snr_grid[k]) !=
                      spec.keep_samples_at.end();
    for (std::size_t m = 0; m < fns.size(); ++m) {
      RealVec per(n);
      for (std::size_t i = 0; i < n; ++i) per[i] = err[m][i] / power[i];
      double value = 0.0;
      if (spec.convention == NmseConvention::Dataset) {
        double e = 0.0, p = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          e += err[m][i];
          p += power[i];
        }
        value = e / p;
      } else {
        value = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(n);
      }
      report.results[m].mean_nmse[k] = value;
      if (keep) report.results[m].per_sample[k] = std::move(per);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string sweep_csv(const EvalReport& report, Figure figure) {
  std::string out = "SNR";
  for (const auto& m : report.methods) out += "," + method_label(m, figure);
  out += "\n";
  for (std::size_t k = 0; k < report.snr_grid.size(); ++k) {
    out += format_double(report.snr_grid[k]);
    for (const auto& r : report.results) out += "," + format_double(r.mean_nmse[k]);
    out += "\n";
  }
  return out;
}

namespace {

const RealVec& kept(const MethodResult& r, std::size_t snr_index, const std::string& method) {
  const auto it = r.per_sample.find(snr_index);
  if (it == r.per_sample.end()) {
    fail(ErrorKind::Configuration, "per-sample NMSE of '" + method + "' was not kept at this SNR");
  }
  return it->second;
}

}  // namespace

std::string samples_csv(const EvalReport& report, std::size_t snr_index, Figure figure) {
  std::string out = "sample_id";
  for (const auto& m : report.methods) out += "," + method_label(m, figure);
  out += "\n";
  std::vector<const RealVec*> cols;
  for (std::size_t m = 0; m < report.methods.size(); ++m) cols.push_back(&kept(report.results[m], snr_index, report.methods[m]));
  const std::size_t n = cols.empty() ? 0 : cols.front()->size();
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(i);
    for (const RealVec* c : cols) out += "," + format_double((*c)[i]);
    out += "\n";
  }
  return out;
}

std::string boxplot_csv(const EvalReport& report, std::size_t snr_index, Figure figure) {
  std::string out = "method,q1,median,q3,mean,whisker_low,whisker_high,n_outliers\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    const BoxplotStats b = boxplot_stats(kept(report.results[m], snr_index, report.methods[m]));
    out += method_label(report.methods[m], figure);
    for (double v : {b.q1, b.median, b.q3, b.mean, b.whisker_low, b.whisker_high}) out += "," + format_double(v);
    out += "," + std::to_string(b.outliers.size()) + "\n";
  }
  return out;
}

std::string cdf_csv(const EvalReport& report, std::size_t snr_index, Figure figure) {
  std::string out = "method,nmse,cdf\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    const std::string label = method_label(report.methods[m], figure);
    for (const auto& [v, f] : empirical_cdf(kept(report.results[m], snr_index, report.methods[m]))) {
      out += label + "," + format_double(v) + "," + format_double(f) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::filesystem::path dataset_path(const std::filesystem::path& data_dir, const std::string& scenario,
                                   DomainTag domain, SplitTag split) {
  return data_dir / scenario / (std::string(to_string(domain)) + "_" + to_string(split) + ".fdce");
}

std::filesystem::path model_path(const std::filesystem::path& model_dir, const std::string& scenario, Activation act,
                                 const std::string& domain, std::optional<double> snr_db) {
  const std::string tail = snr_db ? "snr" + format_double(*snr_db) : std::string("shared");
  return model_dir / scenario / (std::string(to_string(act)) + "-" + domain + "-" + tail + ".json");
}

std::vector<std::string> self_check(const EvalReport& report) {
  std::vector<std::string> failures;
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    const MethodResult& r = report.results[m];
    for (std::size_t k = 0; k < r.mean_nmse.size(); ++k) {
      const double v = r.mean_nmse[k];
      if (!std::isfinite(v) || v < 0.0) {
        failures.push_back(report.methods[m] + ": NMSE at " + format_double(report.snr_grid[k]) + " dB is not finite and nonnegative");
      }
    }
    for (const auto& [k, per] : r.per_sample) {
      if (!all_finite(per) || std::any_of(per.begin(), per.end(), [](double v) { return v < 0.0; })) {
        failures.push_back(report.methods[m] + ": per-sample NMSE has invalid entries");
        continue;
      }
      const BoxplotStats b = boxplot_stats(per);
      if (!(b.q1 <= b.median && b.median <= b.q3)) failures.push_back(report.methods[m] + ": quartiles out of order");
    }
    if (report.methods[m] == "ls" && report.convention == NmseConvention::Dataset) {
      for (std::size_t k = 0; k < r.mean_nmse.size(); ++k) {
        const double expected = snr_to_sigma2(report.snr_grid[k]);
        if (std::abs(r.mean_nmse[k] / expected - 1.0) > 0.05) {
          failures.push_back("ls: NMSE at " + format_double(report.snr_grid[k]) + " dB deviates from 1/SNR by more than 5%");
        }
      }
    }
  }
  return failures;
}

namespace {

using nlohmann::ordered_json;

struct ModelSource {
  std::string scenario;
  std::string domain;
  Activation act;
};

ModelSource model_source(const std::string& method, const std::string& eval_scenario) {
  // cnn-<activation>-<domain>
  const std::string rest = method.substr(4);
  const auto dash = rest.find('-');
  const Activation act = parse_activation(rest.substr(0, dash));
  const std::string domain = rest.substr(dash + 1);
  if (domain == "gauss") return {"gauss", "gauss", act};
  // "mixed" models are the DL-trained networks of the mixed scenario.
  if (domain == "mixed") return {"mixed", "dl", act};
  return {eval_scenario, domain, act};
}

std::string rel_name(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.lexically_relative(base).generic_string();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  const std::string scenario = plan.figure == Figure::Fig4 ? "los" : "mixed";
  ordered_json datasets = ordered_json::object();
  ordered_json models = ordered_json::object();

  auto load = [&](DomainTag domain, SplitTag split) {
    const auto path = dataset_path(plan.data_dir, scenario, domain, split);
    if (!std::filesystem::exists(path)) fail(ErrorKind::Configuration, "missing dataset " + path.string());
    datasets[rel_name(path, plan.data_dir)] = sha256_file(path);
    return read_dataset(path);
  };
  const Dataset test = load(DomainTag::Dl, SplitTag::Test);

  SweepSpec spec;
  spec.methods = figure_methods(plan.figure);
  for (const auto& m : plan.extra_methods) {
    if (!is_method(m)) fail(ErrorKind::Validation, "unknown method '" + m + "'");
    if (std::find(spec.methods.begin(), spec.methods.end(), m) == spec.methods.end()) spec.methods.push_back(m);
  }
  spec.snr_grid = plan.figure == Figure::Fig3 ? RealVec{plan.fixed_snr_db} : plan.snr_grid;
  spec.test = &test;
  spec.seed = plan.seed;
  spec.n_pilots = plan.n_pilots;
  spec.convention = plan.convention;
  spec.keep_samples_at = {plan.fixed_snr_db};
  spec.resources = plan.resources;
  spec.resources.cnn_models.clear();

  auto needs = [&](const char* m) { return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end(); };
  if (needs("lmmse-dl")) spec.resources.c_dl = global_sample_cov(load(DomainTag::Dl, SplitTag::Cov));
  if (needs("lmmse-ul")) spec.resources.c_ul = global_sample_cov(load(DomainTag::UlTransposed, SplitTag::Cov));

  for (const auto& m : spec.methods) {
    if (!is_cnn_method(m)) continue;
    const ModelSource src = model_source(m, scenario);
    std::vector<CnnParams> params;
    auto take = [&](std::optional<double> snr) {
      const auto path = model_path(plan.model_dir, src.scenario, src.act, src.domain, snr);
      if (!std::filesystem::exists(path)) {
        fail(ErrorKind::Configuration, "missing model for '" + m + "': " + path.string());
      }
      models[rel_name(path, plan.model_dir)] = sha256_file(path);
      TrainedModel tm = load_params(path);
      if (tm.params.activation != src.act) fail(ErrorKind::Configuration, "model " + path.string() + " has the wrong activation");
      params.push_back(std::move(tm.params));
    };
    if (plan.shared_snr_models) {
      take(std::nullopt);
    } else {
      for (double snr : spec.snr_grid) take(snr);
    }
    spec.resources.cnn_models[m] = std::move(params);
  }

  ExperimentResult result;
  result.report = snr_sweep(spec);
  result.check_failures = self_check(result.report);

  const std::string fig = to_string(plan.figure);
  auto emit = [&](const std::string& name, const std::string& text) {
    const auto path = plan.report_dir / name;
    write_text_file(path, text);
    result.files.push_back(path);
  };
  const auto fixed_it = std::find(spec.snr_grid.begin(), spec.snr_grid.end(), plan.fixed_snr_db);
  if (plan.figure == Figure::Fig3) {
    emit(fig + "_samples.csv", samples_csv(result.report, 0, plan.figure));
    emit(fig + "_boxplot.csv", boxplot_csv(result.report, 0, plan.figure));
    emit(fig + "_cdf.csv", cdf_csv(result.report, 0, plan.figure));
  } else {
    emit(fig + "_sweep.csv", sweep_csv(result.report, plan.figure));
    if (fixed_it != spec.snr_grid.end()) {
      emit(fig + "_samples.csv",
           samples_csv(result.report, static_cast<std::size_t>(fixed_it - spec.snr_grid.begin()), plan.figure));
    }
  }

  ordered_json manifest;
  ordered_json labels = ordered_json::array();
  for (const auto& m : spec.methods) labels.push_back(method_label(m, plan.figure));
  manifest["plan"] = {{"figure", fig},
                      {"scenario", scenario},
                      {"methods", spec.methods},
                      {"labels", labels},
                      {"snr_grid", spec.snr_grid},
                      {"fixed_snr_db", plan.fixed_snr_db},
                      {"n_test", test.samples.size()},
                      {"n_pilots", plan.n_pilots == 0 ? test.shape.n_tx : plan.n_pilots},
                      {"snr_policy", plan.shared_snr_models ? "shared" : "per-snr"},
                      {"omp", {{"oversampling_rx", spec.resources.omp_oversampling_rx},
                               {"oversampling_tx", spec.resources.omp_oversampling_tx},
                               {"k_max", spec.resources.omp_k_max == 0 ? test.shape.size() / 2 : spec.resources.omp_k_max}}}};
  manifest["seeds"] = {{"eval", plan.seed}, {"scenario", test.seed}};
  manifest["datasets"] = datasets;
  manifest["models"] = models;
  manifest["conventions"] = {
      {"nmse", plan.convention == NmseConvention::Dataset ? "sum ||h - h_hat||^2 / sum ||h||^2 over the test set"
                                                          : "mean over the test set of ||h - h_hat||^2 / ||h||^2"},
      {"quartile", "linear interpolation between order statistics at position q (n - 1)"},
      {"whiskers", "most extreme samples within 1.5 IQR of the box"}};
  manifest["observation_digests"] = result.report.observation_digests;
  ordered_json files = ordered_json::array();
  for (const auto& f : result.files) files.push_back(rel_name(f, plan.report_dir));
  manifest["outputs"] = files;
  if (!plan.config_json.empty()) manifest["config"] = ordered_json::parse(plan.config_json);
  emit(fig + "_manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace fdce
