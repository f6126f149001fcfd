#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deephazard/cli.hpp"
#include "deephazard/presets.hpp"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string preset;
  std::int64_t seed = -1;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    app->add_option("--out", out, "output directory");
    app->add_option("--preset", preset, "named preset");
    app->add_option("--seed", seed, "random seed (nonnegative)");
  }

  json merged(const json& extra) const {
    json cfg = json::object();
    if (!config_path.empty()) cfg = deephazard::cli::load_config_file(config_path);
    deephazard::cli::merge_overrides(cfg, extra);
    if (!out.empty()) cfg["out"] = out;
    if (!preset.empty()) cfg["preset"] = preset;
    if (seed >= 0) cfg["seed"] = static_cast<std::uint64_t>(seed);
    return cfg;
  }
};

void list_presets() {
  std::cout << "simulation presets:\n";
  for (const auto& [name, preset] : deephazard::sim_presets()) {
    std::cout << "  " << name << " (model " << preset.model << ", grid";
    for (double t : preset.grid.points) std::cout << ' ' << t;
    std::cout << ", tau " << preset.grid.tau << ")\n";
  }
  std::cout << "training presets:\n";
  for (const auto& [name, cfg] : deephazard::train_presets()) {
    std::cout << "  " << name << " (layers";
    for (auto w : cfg.widths) std::cout << ' ' << w;
    std::cout << ", lr " << cfg.learning_rate << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DeepHazard: neural additive-hazards survival prediction"};
  app.require_subcommand(1);

  CommonFlags sim_flags, train_flags, predict_flags, eval_flags;
  json sim_extra = json::object(), train_extra = json::object(), predict_extra = json::object(),
       eval_extra = json::object();

  auto* sim = app.add_subcommand("simulate", "generate survival data from a hazard model");
  sim_flags.attach(sim);
  std::string sim_model;
  std::int64_t sim_n = -1;
  double sim_censoring = -1.0;
  sim->add_option("--model", sim_model, "hazard model name (model1..model6)");
  sim->add_option("--n", sim_n, "number of subjects");
  sim->add_option("--censoring", sim_censoring, "target censoring fraction in [0,1)");

  auto* train = app.add_subcommand("train", "fit the per-interval networks");
  train_flags.attach(train);
  std::string train_outcomes, train_covariates;
  train->add_option("--outcomes", train_outcomes, "outcomes CSV (id,time,event)");
  train->add_option("--covariates", train_covariates, "covariates CSV (id,measurement_time,z1..)");

  auto* predict = app.add_subcommand("predict", "survival curves for new subjects");
  predict_flags.attach(predict);
  std::string predict_model, predict_covariates, predict_outcomes;
  predict->add_option("--model", predict_model, "trained model JSON");
  predict->add_option("--covariates", predict_covariates, "covariates CSV");
  predict->add_option("--outcomes", predict_outcomes, "outcomes CSV supplying evaluation times");

  auto* evaluate = app.add_subcommand("evaluate", "metrics from predictions");
  eval_flags.attach(evaluate);
  std::string eval_predictions, eval_outcomes, eval_truth;
  bool eval_imspe = false;
  evaluate->add_option("--predictions", eval_predictions, "predictions CSV");
  evaluate->add_option("--outcomes", eval_outcomes, "outcomes CSV");
  evaluate->add_option("--truth", eval_truth, "truth sidecar CSV (enables oracle metrics)");
  evaluate->add_flag("--imspe", eval_imspe, "compute IMSPE against the truth sidecar");

  auto* presets = app.add_subcommand("presets", "list shipped presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets->parsed()) {
      list_presets();
      return 0;
    }
    if (sim->parsed()) {
      if (!sim_model.empty()) sim_extra["model"] = sim_model;
      if (sim_n >= 0) sim_extra["n"] = static_cast<std::size_t>(sim_n);
      if (sim_censoring >= 0.0) sim_extra["censoring"] = sim_censoring;
      deephazard::cli::cmd_simulate(sim_flags.merged(sim_extra));
    } else if (train->parsed()) {
      if (!train_outcomes.empty()) train_extra["outcomes"] = train_outcomes;
      if (!train_covariates.empty()) train_extra["covariates"] = train_covariates;
      deephazard::cli::cmd_train(train_flags.merged(train_extra));
    } else if (predict->parsed()) {
      if (!predict_model.empty()) predict_extra["model"] = predict_model;
      if (!predict_covariates.empty()) predict_extra["covariates"] = predict_covariates;
      if (!predict_outcomes.empty()) predict_extra["outcomes"] = predict_outcomes;
      deephazard::cli::cmd_predict(predict_flags.merged(predict_extra));
    } else if (evaluate->parsed()) {
      if (!eval_predictions.empty()) eval_extra["predictions"] = eval_predictions;
      if (!eval_outcomes.empty()) eval_extra["outcomes"] = eval_outcomes;
      if (!eval_truth.empty()) eval_extra["truth"] = eval_truth;
      if (eval_imspe) eval_extra["imspe"] = true;
      deephazard::cli::cmd_evaluate(eval_flags.merged(eval_extra));
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
