// fdce: data generation, CNN training, parameter export and figure
// evaluation for the UL-trained DL channel estimator.
//
// Exit codes: 0 success, 2 validation error, 3 missing artifact,
// 4 numerical failure (including failed self-checks).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <set>

#include "fdce/config.hpp"
#include "fdce/dataset_io.hpp"
#include "fdce/parallel.hpp"
#include "fdce/selfcheck.hpp"

using namespace fdce;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Parse:
    case ErrorKind::InvalidDimension:
    case ErrorKind::UnsupportedConfiguration:
      return kExitValidation;
    case ErrorKind::Configuration:
    case ErrorKind::Io:
      return kExitMissing;
    default:
      return kExitNumerical;
  }
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  bool desk = false;

  RunConfig load() const {
    RunConfig cfg = config.empty() ? run_config_from_json("{}", overrides) : load_run_config(config, overrides);
    if (desk) cfg.desk_scale = true;
    return cfg;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "run configuration (JSON)");
  app->add_option("--set", c.overrides, "override a config key, e.g. --set train.epochs=20")->take_all();
  app->add_flag("--desk", c.desk, "desk-scale splits (200 cov / 2000 train / 1000 test)");
}

void summarize(const std::string& name, const Dataset& d) {
  std::printf("%-28s n=%-6zu mean_power=%-10.6g los_fraction=%.3f\n", name.c_str(), d.size(), d.mean_power(),
              d.los_fraction());
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Common& common, const std::string& which) {
  const RunConfig cfg = common.load();
  const SplitCounts counts = cfg.effective_counts();
  std::vector<std::string> families;
  if (which == "all" || which == "mixed") families.push_back("mixed");
  if (which == "all" || which == "los") families.push_back("los");
  const bool gauss = which == "gauss" || (which == "all" && cfg.gauss);
  if (families.empty() && !gauss) fail(ErrorKind::Validation, "unknown dataset family '" + which + "'");

  for (const auto& fam : families) {
    const ScenarioConfig sc = scenario_for(cfg, fam);
    const PairedDatasets sets = generate_paired_datasets(sc, counts.n_cov, counts.n_train, counts.n_test);
    write_text_file(cfg.paths.data_dir / fam / "scenario.json", scenario_to_json(sc));
    for (DomainTag dom : {DomainTag::Ul, DomainTag::UlTransposed, DomainTag::Dl}) {
      for (SplitTag split : {SplitTag::Cov, SplitTag::Train, SplitTag::Test}) {
        const Dataset& d = sets.get(dom, split);
        write_dataset(dataset_path(cfg.paths.data_dir, fam, dom, split), d);
        summarize(fam + "/" + to_string(dom) + "_" + to_string(split), d);
      }
    }
  }
  if (gauss) {
    const Dataset d = generate_gaussian_dataset(cfg.scenario.dl_shape(), counts.n_train, cfg.scenario.seed);
    write_dataset(dataset_path(cfg.paths.data_dir, "gauss", DomainTag::Gauss, SplitTag::Train), d);
    summarize("gauss/gauss_train", d);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainJob {
  std::string family;  // dataset family the model is filed under
  std::string domain;  // ul | dl | gauss
  Activation act;
  std::optional<double> snr;
};

std::vector<TrainJob> figure_jobs(const RunConfig& cfg, Figure fig) {
  std::vector<TrainJob> jobs;
  const std::vector<std::optional<double>> grid = [&] {
    std::vector<std::optional<double>> g;
    if (cfg.shared_snr_models) return std::vector<std::optional<double>>{std::nullopt};
    if (fig == Figure::Fig3) return std::vector<std::optional<double>>{cfg.eval.fixed_snr_db};
    for (double s : cfg.eval.snr_grid) g.emplace_back(s);
    return g;
  }();
  const std::string family = fig == Figure::Fig4 ? "los" : "mixed";
  for (Activation act : {Activation::Relu, Activation::Softmax}) {
    for (const auto& snr : grid) {
      jobs.push_back({family, "dl", act, snr});
      jobs.push_back({family, "ul", act, snr});
      if (fig == Figure::Fig2) jobs.push_back({"gauss", "gauss", act, snr});
      if (fig == Figure::Fig4) jobs.push_back({"mixed", "dl", act, snr});
    }
  }
  return jobs;
}

int cmd_train(const Common& common, const std::string& domain, const std::string& activation,
              const std::vector<std::string>& snrs, const std::string& family, const std::string& figure,
              bool skip_existing) {
  const RunConfig cfg = common.load();
  std::vector<TrainJob> jobs;
  if (!figure.empty()) {
    jobs = figure_jobs(cfg, parse_figure(figure));
  } else {
    if (domain.empty()) fail(ErrorKind::Validation, "train needs --domain or --figure");
    std::string fam = family, dom = domain;
    if (domain == "mixed") {
      fam = "mixed";
      dom = "dl";
    } else if (domain == "gauss") {
      fam = "gauss";
    } else if (domain != "ul" && domain != "dl") {
      fail(ErrorKind::Validation, "unknown domain '" + domain + "' (expected ul|dl|gauss|mixed)");
    }
    std::vector<Activation> acts;
    if (activation == "both") {
      acts = {Activation::Relu, Activation::Softmax};
    } else {
      acts = {parse_activation(activation)};
    }
    std::vector<std::optional<double>> grid;
    if (cfg.shared_snr_models) {
      grid.emplace_back(std::nullopt);
    } else if (snrs.empty() || (snrs.size() == 1 && snrs[0] == "all")) {
      for (double s : cfg.eval.snr_grid) grid.emplace_back(s);
    } else {
      for (const auto& s : snrs) {
        try {
          grid.emplace_back(std::stod(s));
        } catch (const std::exception&) {
          fail(ErrorKind::Validation, "--snr expects numbers or 'all', got '" + s + "'");
        }
      }
    }
    for (Activation a : acts)
      for (const auto& s : grid) jobs.push_back({fam, dom, a, s});
  }

  // Deduplicate (fig4 and fig2 jobs may coincide) while keeping order.
  std::vector<TrainJob> unique;
  std::set<std::string> seen;
  for (const auto& j : jobs) {
    const auto path = model_path(cfg.paths.model_dir, j.family, j.act, j.domain, j.snr);
    if (seen.insert(path.string()).second && !(skip_existing && std::filesystem::exists(path))) unique.push_back(j);
  }

  const PilotConfig pilot = cfg.pilot();
  const EstimatorContext ctx(pilot, 1.0);
  std::vector<std::string> logs(unique.size());
  // Each job is deterministic on its own, so running them concurrently does
  // not change any model file.
  parallel_for(unique.size(), [&](std::size_t i) {
    const TrainJob& j = unique[i];
    const DomainTag tag = j.domain == "gauss" ? DomainTag::Gauss
                          : j.domain == "ul"  ? DomainTag::UlTransposed
                                              : DomainTag::Dl;
    const auto data = dataset_path(cfg.paths.data_dir, j.family, tag, SplitTag::Train);
    if (!std::filesystem::exists(data)) fail(ErrorKind::Configuration, "missing training set " + data.string());
    const Dataset train_set = read_dataset(data);
    TrainConfig tc = cfg.train;
    if (j.snr) {
      tc.snr_train_db = *j.snr;
      tc.snr_mix_db.clear();
    } else if (tc.snr_mix_db.empty()) {
      tc.snr_mix_db = cfg.eval.snr_grid;
    }
    const TrainedModel m = train(train_set, ctx, tc, j.act);
    const auto out = model_path(cfg.paths.model_dir, j.family, j.act, j.domain, j.snr);
    save_params(m, out);
    std::string line = out.lexically_relative(cfg.paths.model_dir).generic_string() + " loss:";
    for (double l : m.train_meta.loss_history) line += " " + format_double(l);
    logs[i] = line;
  });
  for (const auto& l : logs) std::printf("%s\n", l.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_eval(const Common& common, const std::string& figure) {
  const RunConfig cfg = common.load();
  ExperimentPlan plan;
  plan.figure = parse_figure(figure);
  plan.snr_grid = cfg.eval.snr_grid;
  plan.fixed_snr_db = cfg.eval.fixed_snr_db;
  plan.extra_methods = cfg.eval.extra_methods;
  plan.data_dir = cfg.paths.data_dir;
  plan.model_dir = cfg.paths.model_dir;
  plan.report_dir = cfg.paths.report_dir;
  plan.seed = cfg.eval.seed;
  plan.n_pilots = cfg.n_pilots;
  plan.shared_snr_models = cfg.shared_snr_models;
  plan.convention = cfg.eval.convention;
  plan.resources.omp_oversampling_rx = cfg.eval.omp_oversampling_rx;
  plan.resources.omp_oversampling_tx = cfg.eval.omp_oversampling_tx;
  plan.resources.omp_k_max = cfg.eval.omp_k_max;
  plan.resources.grid_points = cfg.eval.grid_points;
  RunConfig echo = cfg;
  echo.paths = {};  // keep the manifest independent of where the run lives
  plan.config_json = run_config_to_json(echo);

  const ExperimentResult res = run_experiment(plan);
  const EvalReport& r = res.report;
  std::printf("%-8s", "SNR");
  for (const auto& m : r.methods) std::printf(" %14s", method_label(m, plan.figure).c_str());
  std::printf("\n");
  for (std::size_t k = 0; k < r.snr_grid.size(); ++k) {
    std::printf("%-8g", r.snr_grid[k]);
    for (const auto& mr : r.results) std::printf(" %14.4e", mr.mean_nmse[k]);
    std::printf("\n");
  }
  for (const auto& f : res.files) std::printf("wrote %s\n", f.string().c_str());
  if (!res.check_failures.empty()) {
    for (const auto& f : res.check_failures) std::fprintf(stderr, "self-check failed: %s\n", f.c_str());
    return kExitNumerical;
  }
  return 0;
}

int cmd_export(const std::string& model, const std::string& out) {
  if (!std::filesystem::exists(model)) fail(ErrorKind::Configuration, "model file not found: " + model);
  const TrainedModel m = load_params(model);
  save_params(m, out);
  const TrainedModel back = load_params(out);
  if (!(back.params == m.params)) fail(ErrorKind::NumericalConditioning, "exported parameters do not round-trip");
  std::printf("exported %s (%zu parameter values, %s, %zux%zu)\n", out.c_str(), 4 * m.params.shape.size(),
              to_string(m.params.activation), m.params.shape.n_rx, m.params.shape.n_tx);
  return 0;
}

int cmd_selfcheck() {
  bool ok = true;
  for (const auto& c : run_selfcheck()) {
    std::printf("[%s] %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FDD downlink channel estimation: UL-trained CNN estimator and baselines"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c;
  std::string families = "all";
  auto* gen = app.add_subcommand("gen-data", "generate UL/DL datasets (mixed, LOS-only, Gaussian)");
  add_common(gen, gen_c);
  gen->add_option("--family", families, "mixed|los|gauss|all")->check(CLI::IsMember({"mixed", "los", "gauss", "all"}));

  std::string domain, activation = "both", family = "mixed", figure_train;
  std::vector<std::string> snrs;
  bool skip_existing = false;
  auto* tr = app.add_subcommand("train", "train CNN estimators and write parameter files");
  add_common(tr, train_c);
  tr->add_option("--domain", domain, "ul|dl|gauss|mixed");
  tr->add_option("--activation", activation, "relu|softmax|both");
  tr->add_option("--snr", snrs, "training SNR(s) in dB, or 'all' for the eval grid");
  tr->add_option("--scenario", family, "dataset family for ul/dl (mixed|los)");
  tr->add_option("--figure", figure_train, "train every model a figure needs (fig2|fig3|fig4)");
  tr->add_flag("--skip-existing", skip_existing, "keep model files that already exist");

  std::string figure_eval;
  auto* ev = app.add_subcommand("eval", "evaluate a figure and write CSVs plus a manifest");
  add_common(ev, eval_c);
  ev->add_option("--figure", figure_eval, "fig2|fig3|fig4")->required();

  std::string model, out;
  auto* ex = app.add_subcommand("export-params", "re-serialize a model file for offloading");
  ex->add_option("model", model, "model file")->required();
  ex->add_option("out", out, "output path")->required();

  auto* sc = app.add_subcommand("selfcheck", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) return cmd_gen_data(gen_c, families);
    if (*tr) return cmd_train(train_c, domain, activation, snrs, family, figure_train, skip_existing);
    if (*ev) return cmd_eval(eval_c, figure_eval);
    if (*ex) return cmd_export(model, out);
    if (*sc) return cmd_selfcheck();
  } catch (const Error& e) {
    std::fprintf(stderr, "fdce: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fdce: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
