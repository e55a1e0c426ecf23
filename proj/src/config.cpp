#include "fdce/config.hpp"

#include <set>

#include <json.hpp>

#include "fdce/dataset_io.hpp"

namespace fdce {

using nlohmann::ordered_json;

PilotConfig RunConfig::pilot() const {
  PilotConfig p = full_pilots(scenario.dl_shape());
  if (n_pilots != 0) p.n_p = n_pilots;
  return p;
}

void validate(const RunConfig& cfg) {
  validate(cfg.scenario);
  std::string bad;
  if (cfg.n_pilots > cfg.scenario.n_tx) bad += " n_pilots";
  const SplitCounts c = cfg.effective_counts();
  if (c.n_cov == 0) bad += " counts.cov";
  if (c.n_train == 0) bad += " counts.train";
  if (c.n_test == 0) bad += " counts.test";
  if (cfg.eval.snr_grid.empty()) bad += " eval.snr_grid";
  for (double s : cfg.eval.snr_grid) {
    if (!std::isfinite(s)) bad += " eval.snr_grid";
  }
  if (!std::isfinite(cfg.eval.fixed_snr_db)) bad += " eval.fixed_snr_db";
  if (cfg.eval.omp_oversampling_rx == 0) bad += " eval.omp_oversampling_rx";
  if (cfg.eval.omp_oversampling_tx == 0) bad += " eval.omp_oversampling_tx";
  if (cfg.eval.grid_points == 0) bad += " eval.grid_points";
  for (const auto& m : cfg.eval.extra_methods) {
    if (!is_method(m)) bad += " eval.extra_methods(" + m + ")";
  }
  if (!bad.empty()) fail(ErrorKind::Validation, "invalid config keys:" + bad);
  validate(cfg.train);
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["scenario"] = ordered_json::parse(scenario_to_json(cfg.scenario));
  j["n_pilots"] = cfg.n_pilots;
  j["counts"] = {{"cov", cfg.counts.n_cov}, {"train", cfg.counts.n_train}, {"test", cfg.counts.n_test}};
  j["desk_scale"] = cfg.desk_scale;
  j["gauss"] = cfg.gauss;
  const TrainConfig& t = cfg.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"batches_per_epoch", t.batches_per_epoch},
                {"learning_rate", t.learning_rate},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"epsilon", t.epsilon},
                {"snr_train_db", t.snr_train_db},
                {"snr_mix_db", t.snr_mix_db},
                {"seed", t.seed},
                {"init", to_string(t.init)},
                {"init_noise", t.init_noise},
                {"scaled_steps", t.scaled_steps}};
  j["shared_snr_models"] = cfg.shared_snr_models;
  const EvalConfig& e = cfg.eval;
  j["eval"] = {{"snr_grid", e.snr_grid},
               {"fixed_snr_db", e.fixed_snr_db},
               {"seed", e.seed},
               {"extra_methods", e.extra_methods},
               {"omp_oversampling_rx", e.omp_oversampling_rx},
               {"omp_oversampling_tx", e.omp_oversampling_tx},
               {"omp_k_max", e.omp_k_max},
               {"grid_points", e.grid_points},
               {"nmse_convention", to_string(e.convention)}};
  j["paths"] = {{"data_dir", cfg.paths.data_dir.generic_string()},
                {"model_dir", cfg.paths.model_dir.generic_string()},
                {"report_dir", cfg.paths.report_dir.generic_string()}};
  return j.dump(2) + "\n";
}

namespace {

void check_keys(const ordered_json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(ErrorKind::Parse, "config: '" + where + "' must be an object");
  std::string unknown;
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) unknown += " " + (where.empty() ? k : where + "." + k);
  }
  if (!unknown.empty()) fail(ErrorKind::Validation, "unknown config keys:" + unknown);
}

template <class T>
void take(const ordered_json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Parse, "config: '" + where + "." + key + "' has the wrong type");
  }
}

void apply_override(ordered_json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::Validation, "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorKind::Validation, "override key '" + key + "' has an empty component");
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  j[ordered_json::json_pointer(pointer)] = value;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, const std::vector<std::string>& overrides,
                               const std::filesystem::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("config: malformed JSON: ") + e.what());
  }
  if (j.is_null()) j = ordered_json::object();
  for (const auto& o : overrides) apply_override(j, o);
  check_keys(j, "", {"scenario", "n_pilots", "counts", "desk_scale", "gauss", "train", "shared_snr_models", "eval", "paths"});

  RunConfig cfg;
  if (j.contains("scenario")) {
    check_keys(j["scenario"], "scenario",
               {"n_rx", "n_tx", "f_ul", "f_dl", "los_mode", "los_probability", "l_los", "l_nlos", "angle_spread_deg",
                "delay_spread_s", "power_decay", "element_spacing", "los_power_fraction", "sector_deg", "seed"});
    cfg.scenario = scenario_from_json(j["scenario"].dump());
  }
  take(j, "n_pilots", cfg.n_pilots, "");
  if (j.contains("counts")) {
    const auto& c = j["counts"];
    check_keys(c, "counts", {"cov", "train", "test"});
    take(c, "cov", cfg.counts.n_cov, "counts");
    take(c, "train", cfg.counts.n_train, "counts");
    take(c, "test", cfg.counts.n_test, "counts");
  }
  take(j, "desk_scale", cfg.desk_scale, "");
  take(j, "gauss", cfg.gauss, "");
  take(j, "shared_snr_models", cfg.shared_snr_models, "");
  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, "train",
               {"epochs", "batch_size", "batches_per_epoch", "learning_rate", "beta1", "beta2", "epsilon", "snr_train_db",
                "snr_mix_db", "seed", "init", "init_noise", "scaled_steps"});
    TrainConfig& tc = cfg.train;
    take(t, "epochs", tc.epochs, "train");
    take(t, "batch_size", tc.batch_size, "train");
    take(t, "batches_per_epoch", tc.batches_per_epoch, "train");
    take(t, "learning_rate", tc.learning_rate, "train");
    take(t, "beta1", tc.beta1, "train");
    take(t, "beta2", tc.beta2, "train");
    take(t, "epsilon", tc.epsilon, "train");
    take(t, "snr_train_db", tc.snr_train_db, "train");
    take(t, "snr_mix_db", tc.snr_mix_db, "train");
    take(t, "seed", tc.seed, "train");
    std::string init = to_string(tc.init);
    take(t, "init", init, "train");
    tc.init = parse_init_mode(init);
    take(t, "init_noise", tc.init_noise, "train");
    take(t, "scaled_steps", tc.scaled_steps, "train");
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    check_keys(e, "eval",
               {"snr_grid", "fixed_snr_db", "seed", "extra_methods", "omp_oversampling_rx", "omp_oversampling_tx",
                "omp_k_max", "grid_points", "nmse_convention"});
    EvalConfig& ec = cfg.eval;
    take(e, "snr_grid", ec.snr_grid, "eval");
    take(e, "fixed_snr_db", ec.fixed_snr_db, "eval");
    take(e, "seed", ec.seed, "eval");
    take(e, "extra_methods", ec.extra_methods, "eval");
    take(e, "omp_oversampling_rx", ec.omp_oversampling_rx, "eval");
    take(e, "omp_oversampling_tx", ec.omp_oversampling_tx, "eval");
    take(e, "omp_k_max", ec.omp_k_max, "eval");
    take(e, "grid_points", ec.grid_points, "eval");
    std::string conv = to_string(ec.convention);
    take(e, "nmse_convention", conv, "eval");
    ec.convention = parse_nmse_convention(conv);
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, "paths", {"data_dir", "model_dir", "report_dir"});
    std::string d = cfg.paths.data_dir.string(), m = cfg.paths.model_dir.string(), r = cfg.paths.report_dir.string();
    take(p, "data_dir", d, "paths");
    take(p, "model_dir", m, "paths");
    take(p, "report_dir", r, "paths");
    cfg.paths = {d, m, r};
  }
  cfg.paths.data_dir = resolve(cfg.paths.data_dir, base_dir);
  cfg.paths.model_dir = resolve(cfg.paths.model_dir, base_dir);
  cfg.paths.report_dir = resolve(cfg.paths.report_dir, base_dir);
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Configuration, "config file not found: " + path.string());
  return run_config_from_json(read_text_file(path), overrides, path.parent_path());
}

ScenarioConfig scenario_for(const RunConfig& cfg, const std::string& family) {
  ScenarioConfig s = cfg.scenario;
  if (family == "mixed") return s;
  if (family == "los") {
    // A disjoint set of user positions with LOS everywhere.
    s.los_mode = LosMode::LosOnly;
    s.seed = splitmix64(cfg.scenario.seed ^ 0x4C4F53ULL);
    return s;
  }
  fail(ErrorKind::Validation, "unknown dataset family '" + family + "' (expected mixed|los)");
}

}  // namespace fdce
