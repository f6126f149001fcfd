#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "deephazard/data.hpp"
#include "deephazard/io.hpp"
#include "deephazard/metrics.hpp"
#include "deephazard/predict.hpp"
#include "deephazard/presets.hpp"
#include "deephazard/simulate.hpp"
#include "deephazard/train.hpp"

namespace deephazard::cli {

using nlohmann::json;

// Config handling. A run is described by a JSON object (file and/or flag
// overrides merged upstream); strict key checking catches typos before any
// file is touched.
inline void check_keys(const json& cfg, const std::set<std::string>& allowed,
                       const std::string& context) {
  if (!cfg.is_object()) throw std::invalid_argument(context + ": config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw std::invalid_argument(context + ": unknown config key '" + key + "'");
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": invalid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
  return cfg;
}

inline void merge_overrides(json& cfg, const json& overrides) {
  for (const auto& [key, value] : overrides.items()) cfg[key] = value;
}

namespace detail {

inline std::string require_string(const json& cfg, const std::string& key,
                                  const std::string& context) {
  if (!cfg.contains(key))
    throw std::invalid_argument(context + ": missing required key '" + key + "'");
  if (!cfg.at(key).is_string())
    throw std::invalid_argument(context + ": key '" + key + "' must be a string");
  return cfg.at(key).get<std::string>();
}

inline std::string out_dir(const json& cfg, const std::string& context) {
  const std::string dir = require_string(cfg, "out", context);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// Activation tokens as they appear in the hyperparameter tables: "relu",
// "elu(0.1)", "selu", ...
inline ActivationSpec parse_activation_token(std::string s) {
  ActivationSpec spec;
  const auto open = s.find('(');
  if (open != std::string::npos) {
    if (s.back() != ')')
      throw std::invalid_argument("activation '" + s + "': expected name(alpha)");
    spec.alpha = parse_double(s.substr(open + 1, s.size() - open - 2), "activation alpha");
    s = s.substr(0, open);
  }
  spec.kind = activation_from_name(s);
  return spec;
}

inline TimeGrid grid_from_json(const json& cfg, const std::string& context) {
  TimeGrid grid;
  grid.points = cfg.at("grid").get<std::vector<double>>();
  grid.tau = cfg.value("tau", 1.0);
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(context + ": " + e.what());
  }
  return grid;
}

inline std::uint64_t seed_from_json(const json& cfg) { return cfg.value("seed", std::uint64_t{0}); }

inline json manifest_base(const std::string& command, const json& cfg) {
  json m;
  m["tool"] = "deephazard";
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["config"] = cfg;
  return m;
}

// Assembles SurvivalRecords by joining outcomes with covariates on id (both
// ways strict) and aligning each subject's measurements to the grid.
inline std::vector<SurvivalRecord> assemble_records(const std::vector<Outcome>& outcomes,
                                                    std::map<std::string, CovariateSeries>& cov,
                                                    const TimeGrid& grid) {
  std::vector<SurvivalRecord> records;
  records.reserve(outcomes.size());
  std::set<std::string> seen;
  for (const auto& o : outcomes) {
    if (!seen.insert(o.id).second)
      throw std::invalid_argument("duplicate outcome id '" + o.id + "'");
    const auto it = cov.find(o.id);
    if (it == cov.end())
      throw std::invalid_argument("no covariate rows for outcome id '" + o.id + "'");
    SurvivalRecord rec;
    rec.id = o.id;
    rec.x = o.time;
    rec.delta = o.event;
    rec.covariates = align_to_grid(it->second.times, it->second.values, grid);
    records.push_back(std::move(rec));
  }
  for (const auto& [id, series] : cov) {
    (void)series;
    if (seen.find(id) == seen.end())
      throw std::invalid_argument("covariate rows for id '" + id + "' have no outcome row");
  }
  return records;
}

}  // namespace detail

// --- simulate -------------------------------------------------------------

inline void cmd_simulate(json cfg) {
  check_keys(cfg, {"preset", "model", "grid", "tau", "n", "censoring", "seed", "out", "n_pilot"},
             "simulate");
  std::string model_name;
  TimeGrid grid;
  std::size_t n = 0;
  if (cfg.contains("preset")) {
    const SimPreset preset = sim_preset(cfg.at("preset").get<std::string>());
    model_name = preset.model;
    grid = preset.grid;
    n = preset.default_n;
  }
  if (cfg.contains("model")) model_name = cfg.at("model").get<std::string>();
  if (model_name.empty())
    throw std::invalid_argument("simulate: need 'preset' or 'model'");
  if (cfg.contains("grid")) grid = detail::grid_from_json(cfg, "simulate");
  else if (cfg.contains("tau")) grid.tau = cfg.at("tau").get<double>();
  if (grid.points.empty()) throw std::invalid_argument("simulate: no grid (give 'preset' or 'grid')");
  grid.validate();
  if (cfg.contains("n")) n = cfg.at("n").get<std::size_t>();
  if (n == 0) throw std::invalid_argument("simulate: n must be >= 1");
  const double censoring = cfg.value("censoring", 0.0);
  const std::size_t n_pilot = cfg.value("n_pilot", std::size_t{2000});
  const std::uint64_t seed = detail::seed_from_json(cfg);

  const SimModelSpec spec = model_spec(model_name);
  const SimOutput sim = generate_dataset(spec, n, grid, censoring, seed, n_pilot);

  const std::string dir = detail::out_dir(cfg, "simulate");
  std::vector<Outcome> outcomes;
  outcomes.reserve(n);
  for (const auto& r : sim.records) outcomes.push_back({r.id, r.x, r.delta});
  write_outcomes_csv(detail::join_path(dir, "outcomes.csv"), outcomes);

  std::vector<std::pair<std::string, CovariateSeries>> cov;
  cov.reserve(n);
  for (const auto& r : sim.records) {
    CovariateSeries series;
    series.times = grid.points;
    series.values = r.covariates;
    cov.emplace_back(r.id, std::move(series));
  }
  write_covariates_csv(detail::join_path(dir, "covariates.csv"), cov, spec.dim);
  write_truth_csv(detail::join_path(dir, "truth.csv"), sim);

  json manifest = detail::manifest_base("simulate", cfg);
  manifest["seed"] = seed;
  manifest["model"] = model_name;
  manifest["n"] = n;
  manifest["grid"] = grid.points;
  manifest["tau"] = grid.tau;
  manifest["target_censoring"] = censoring;
  manifest["achieved_censoring"] = sim.achieved_censoring;
  if (std::isfinite(sim.censoring_scale)) manifest["censoring_scale"] = sim.censoring_scale;
  write_manifest(detail::join_path(dir, "manifest.json"), manifest);
}

// --- train ----------------------------------------------------------------

inline TrainConfig train_config_from_json(const json& cfg) {
  TrainConfig tc;
  if (cfg.contains("preset")) tc = train_preset(cfg.at("preset").get<std::string>());
  if (cfg.contains("widths")) tc.widths = cfg.at("widths").get<std::vector<std::size_t>>();
  if (cfg.contains("activations")) {
    tc.activations.clear();
    if (cfg.at("activations").is_string()) {
      tc.activations.push_back(detail::parse_activation_token(cfg.at("activations").get<std::string>()));
    } else {
      for (const auto& tok : cfg.at("activations"))
        tc.activations.push_back(detail::parse_activation_token(tok.get<std::string>()));
    }
  }
  if (cfg.contains("dropout")) {
    tc.dropout.clear();
    if (cfg.at("dropout").is_number()) {
      tc.dropout.push_back(cfg.at("dropout").get<double>());
    } else {
      tc.dropout = cfg.at("dropout").get<std::vector<double>>();
    }
  }
  if (cfg.contains("optimizer")) {
    const std::string opt = cfg.at("optimizer").get<std::string>();
    if (opt == "adam") tc.optimizer = OptimizerKind::Adam;
    else if (opt == "sgd") tc.optimizer = OptimizerKind::Sgd;
    else throw std::invalid_argument("train: unknown optimizer '" + opt + "'");
  }
  if (cfg.contains("learning_rate")) tc.learning_rate = cfg.at("learning_rate").get<double>();
  if (cfg.contains("penalty")) {
    const std::string pen = cfg.at("penalty").get<std::string>();
    if (pen == "ridge") tc.penalty.p = 2;
    else if (pen == "lasso") tc.penalty.p = 1;
    else throw std::invalid_argument("train: unknown penalty '" + pen + "' (ridge or lasso)");
  }
  if (cfg.contains("lambda")) tc.penalty.lambda = cfg.at("lambda").get<double>();
  if (cfg.contains("max_epochs")) tc.max_epochs = cfg.at("max_epochs").get<std::size_t>();
  if (cfg.contains("early_stop")) tc.early_stop = cfg.at("early_stop").get<double>();
  tc.seed = detail::seed_from_json(cfg);
  if (tc.widths.empty())
    throw std::invalid_argument("train: no architecture (give 'preset' or 'widths')");
  tc.validate();
  return tc;
}

inline void cmd_train(json cfg) {
  check_keys(cfg,
             {"outcomes", "covariates", "preset", "widths", "activations", "dropout", "optimizer",
              "learning_rate", "penalty", "lambda", "max_epochs", "early_stop", "grid", "tau",
              "seed", "out"},
             "train");
  const std::vector<Outcome> outcomes =
      read_outcomes_csv(detail::require_string(cfg, "outcomes", "train"));
  auto cov = read_covariates_csv(detail::require_string(cfg, "covariates", "train"));

  TimeGrid grid;
  if (cfg.contains("grid")) {
    grid = detail::grid_from_json(cfg, "train");
  } else {
    // No explicit grid: the union of all measurement times, with tau from the
    // config (horizon past the last measurement).
    std::set<double> times;
    for (const auto& [id, series] : cov) {
      (void)id;
      times.insert(series.times.begin(), series.times.end());
    }
    grid.points.assign(times.begin(), times.end());
    grid.tau = cfg.value("tau", 1.0);
    grid.validate();
  }
  const TrainConfig tc = train_config_from_json(cfg);

  std::vector<SurvivalRecord> records = detail::assemble_records(outcomes, cov, grid);
  const DeepHazardModel model = fit(std::move(records), grid, tc);

  const std::string dir = detail::out_dir(cfg, "train");
  save_model(detail::join_path(dir, "model.json"), model);
  write_loss_curves_csv(detail::join_path(dir, "loss_curves.csv"), model.reports);

  json report;
  report["intervals"] = json::array();
  for (std::size_t j = 0; j < model.reports.size(); ++j) {
    const auto& r = model.reports[j];
    report["intervals"].push_back({{"interval", j},
                                   {"t_j", model.grid.points[j]},
                                   {"n_j", r.n_j},
                                   {"epochs_run", r.epochs_run},
                                   {"final_loss", r.final_loss}});
  }
  {
    auto out = deephazard::detail::open_out(detail::join_path(dir, "report.json"));
    out << report.dump(2) << '\n';
  }

  json manifest = detail::manifest_base("train", cfg);
  manifest["seed"] = tc.seed;
  manifest["grid"] = grid.points;
  manifest["tau"] = grid.tau;
  write_manifest(detail::join_path(dir, "manifest.json"), manifest);
}

// --- predict --------------------------------------------------------------

inline void cmd_predict(json cfg) {
  check_keys(cfg, {"model", "covariates", "outcomes", "times", "out"}, "predict");
  const DeepHazardModel model = load_model(detail::require_string(cfg, "model", "predict"));
  auto cov = read_covariates_csv(detail::require_string(cfg, "covariates", "predict"));

  std::vector<double> times;
  if (cfg.contains("times")) {
    times = cfg.at("times").get<std::vector<double>>();
  } else if (cfg.contains("outcomes")) {
    // Default evaluation grid: every observed outcome time, truncated at the
    // model horizon so curves stay inside the trained range.
    for (const auto& o : read_outcomes_csv(cfg.at("outcomes").get<std::string>()))
      times.push_back(std::min(o.time, model.grid.tau));
  } else {
    throw std::invalid_argument("predict: need 'times' or 'outcomes' for the evaluation grid");
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty()) throw std::invalid_argument("predict: empty evaluation grid");

  // Subject order: outcomes file order when given, covariate file order else.
  std::vector<std::string> ids;
  if (cfg.contains("outcomes")) {
    for (const auto& o : read_outcomes_csv(cfg.at("outcomes").get<std::string>())) {
      if (cov.find(o.id) == cov.end())
        throw std::invalid_argument("predict: no covariate rows for outcome id '" + o.id + "'");
      ids.push_back(o.id);
    }
  } else {
    for (const auto& [id, series] : cov) {
      (void)series;
      ids.push_back(id);
    }
  }

  const std::string dir = detail::out_dir(cfg, "predict");
  std::vector<SurvivalCurve> curves;
  curves.reserve(ids.size());
  std::vector<std::string> alignment_log;
  for (const auto& id : ids) {
    const CovariateSeries& series = cov.at(id);
    const auto aligned = align_to_grid(series.times, series.values, model.grid);
    for (std::size_t j = 0; j < model.grid.points.size(); ++j) {
      const double target = model.grid.points[j];
      const bool exact = std::find(series.times.begin(), series.times.end(), target) !=
                         series.times.end();
      if (!exact)
        alignment_log.push_back(id + ',' + format_double(target));
    }
    const std::vector<double> risks = risk_path(model, aligned);
    curves.push_back(survival_curve(model, risks, times, id));
  }
  write_predictions_csv(detail::join_path(dir, "predictions.csv"), curves);
  if (!alignment_log.empty()) {
    auto out = deephazard::detail::open_out(detail::join_path(dir, "alignment_log.csv"));
    out << "id,grid_time\n";
    for (const auto& line : alignment_log) out << line << '\n';
  }

  json manifest = detail::manifest_base("predict", cfg);
  manifest["n_subjects"] = ids.size();
  manifest["n_times"] = times.size();
  write_manifest(detail::join_path(dir, "manifest.json"), manifest);
}

// --- evaluate -------------------------------------------------------------

inline void cmd_evaluate(json cfg) {
  check_keys(cfg,
             {"predictions", "outcomes", "truth", "imspe", "tau", "grid_size", "ph_covariate",
              "ph_threshold", "covariates", "out"},
             "evaluate");
  const std::vector<SurvivalCurve> curves =
      read_predictions_csv(detail::require_string(cfg, "predictions", "evaluate"));
  std::vector<Outcome> outcomes = read_outcomes_csv(detail::require_string(cfg, "outcomes", "evaluate"));
  const double tau = cfg.value("tau", 1.0);
  if (!(tau > 0.0)) throw std::invalid_argument("evaluate: tau must be positive");

  std::map<std::string, std::size_t> curve_index;
  for (std::size_t k = 0; k < curves.size(); ++k) curve_index[curves[k].id] = k;
  std::vector<std::size_t> curve_of;
  std::vector<double> times;
  std::vector<int> deltas;
  for (const auto& o : outcomes) {
    const auto it = curve_index.find(o.id);
    if (it == curve_index.end())
      throw std::invalid_argument("evaluate: no predictions for outcome id '" + o.id + "'");
    curve_of.push_back(it->second);
    if (o.time >= tau) {
      times.push_back(tau);
      deltas.push_back(0);
    } else {
      times.push_back(o.time);
      deltas.push_back(o.event);
    }
  }

  // Predicted survival between emitted times: held constant (right-continuous
  // step), 1 before the first time.
  std::vector<StepFunction> steps;
  steps.reserve(curves.size());
  for (const auto& c : curves) {
    StepFunction s(c.eval_times, c.values);
    s.initial_value = 1.0;
    steps.push_back(std::move(s));
  }
  const auto pred_eval = [&](std::size_t i, double t) { return steps[curve_of[i]].value_at(t); };

  json metrics;
  metrics["n"] = outcomes.size();
  metrics["tau"] = tau;
  metrics["c_index_td"] = c_index_td(times, deltas, pred_eval);

  // Scalar risk for the traditional index: negative restricted mean survival
  // (trapezoid over the emitted curve), a monotone summary of the whole curve.
  std::vector<double> risk_scores;
  risk_scores.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& c = curves[curve_of[i]];
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < c.eval_times.size(); ++k)
      area += 0.5 * (c.eval_times[k + 1] - c.eval_times[k]) * (c.values[k] + c.values[k + 1]);
    risk_scores.push_back(c.eval_times.size() < 2 ? -c.values.front() : -area);
  }
  metrics["c_index_traditional"] = c_index_traditional(times, deltas, risk_scores);

  const bool want_imspe = cfg.value("imspe", false);
  if (want_imspe && !cfg.contains("truth"))
    throw std::invalid_argument("evaluate: IMSPE requested but no 'truth' sidecar given");
  if (cfg.contains("truth")) {
    const TruthSidecar truth = read_truth_csv(cfg.at("truth").get<std::string>());
    std::map<std::string, std::size_t> truth_index;
    for (std::size_t k = 0; k < truth.ids.size(); ++k) truth_index[truth.ids[k]] = k;
    std::vector<std::vector<double>> z0;
    z0.reserve(outcomes.size());
    for (const auto& o : outcomes) {
      const auto it = truth_index.find(o.id);
      if (it == truth_index.end())
        throw std::invalid_argument("evaluate: no truth row for outcome id '" + o.id + "'");
      z0.push_back(truth.z0[it->second]);
    }
    const SimModelSpec spec = model_spec(truth.model);
    const TrueSurvivalCache cache = make_true_survival_cache(spec, z0, tau, 4096);
    const auto truth_eval = [&](std::size_t i, double t) { return cache.survival(i, t); };
    metrics["c_index_td_oracle"] = c_index_td(times, deltas, truth_eval);
    if (want_imspe) {
      const std::size_t grid_size = cfg.value("grid_size", std::size_t{200});
      metrics["imspe"] = imspe(pred_eval, truth_eval, outcomes.size(), tau, grid_size);
      metrics["imspe_grid_size"] = grid_size;
    }
  }

  const std::string dir = detail::out_dir(cfg, "evaluate");
  if (cfg.contains("ph_covariate")) {
    if (!cfg.contains("covariates"))
      throw std::invalid_argument("evaluate: 'ph_covariate' needs the 'covariates' file");
    auto cov = read_covariates_csv(cfg.at("covariates").get<std::string>());
    const std::size_t k = cfg.at("ph_covariate").get<std::size_t>();
    const double threshold = cfg.value("ph_threshold", 0.5);
    std::vector<int> group;
    group.reserve(outcomes.size());
    for (const auto& o : outcomes) {
      const auto it = cov.find(o.id);
      if (it == cov.end())
        throw std::invalid_argument("evaluate: no covariate rows for outcome id '" + o.id + "'");
      if (k == 0 || k > it->second.values.front().size())
        throw std::invalid_argument("evaluate: ph_covariate index out of range");
      group.push_back(it->second.values.front()[k - 1] > threshold ? 1 : 0);
    }
    write_ph_csv(detail::join_path(dir, "ph_ratio.csv"), ph_diagnostic(times, deltas, group));
    metrics["ph_covariate"] = k;
  }

  {
    auto out = deephazard::detail::open_out(detail::join_path(dir, "metrics.json"));
    out << metrics.dump(2) << '\n';
  }
  json manifest = detail::manifest_base("evaluate", cfg);
  write_manifest(detail::join_path(dir, "manifest.json"), manifest);
}

}  // namespace deephazard::cli
