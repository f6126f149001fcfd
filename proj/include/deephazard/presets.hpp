#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/simulate.hpp"
#include "deephazard/train.hpp"

namespace deephazard {

// Shipped experiment settings. Simulation presets pair a hazard model with its
// measurement grid; training presets carry the published hyperparameter sets
// (tables ti1 through ti4). Censoring targets stay runtime flags since every
// study varies them independently.
struct SimPreset {
  std::string model;
  TimeGrid grid;
  std::size_t default_n = 1000;
};

inline const std::map<std::string, SimPreset>& sim_presets() {
  static const std::map<std::string, SimPreset> presets = [] {
    std::map<std::string, SimPreset> m;
    const TimeGrid g14({0.001, 0.2, 0.4, 0.6}, 1.0);
    m["model1"] = {"model1", g14, 1000};
    m["model2"] = {"model2", g14, 1000};
    m["model3"] = {"model3", g14, 1000};
    m["model4"] = {"model4", g14, 1000};
    // Models 5 and 6 appear with two grids each: the wide grids of the
    // high-dimensional study and the tighter grids of the censoring study.
    m["model5"] = {"model5", TimeGrid({0.001, 0.1, 0.2, 0.3}, 1.0), 1000};
    m["model5-wide"] = {"model5", g14, 1000};
    m["model6"] = {"model6", TimeGrid({0.001, 0.1, 0.15, 0.2}, 1.0), 1000};
    m["model6-wide"] = {"model6", TimeGrid({0.001, 0.1, 0.2, 0.3}, 1.0), 1000};
    // Measurement-shift study grids (A is the model6 default above).
    m["model6-gridB"] = {"model6", TimeGrid({0.001, 0.05, 0.08, 0.12}, 1.0), 1000};
    m["model6-gridC"] = {"model6", TimeGrid({0.001, 0.15, 0.2, 0.25}, 1.0), 1000};
    m["model6-gridD"] = {"model6", TimeGrid({0.001, 0.05, 0.08, 0.12, 0.15, 0.2}, 1.0), 1000};
    m["pure-baseline"] = {"pure-baseline", g14, 1000};
    m["constant-hazard"] = {"constant-hazard", g14, 1000};
    return m;
  }();
  return presets;
}

inline SimPreset sim_preset(const std::string& name) {
  const auto it = sim_presets().find(name);
  if (it == sim_presets().end())
    throw std::invalid_argument("unknown simulation preset '" + name + "'");
  return it->second;
}

inline const std::map<std::string, TrainConfig>& train_presets() {
  static const std::map<std::string, TrainConfig> presets = [] {
    std::map<std::string, TrainConfig> m;
    const ActivationSpec relu{Activation::Relu, 1.0};
    const ActivationSpec selu{Activation::Selu, 1.0};
    auto elu = [](double a) { return ActivationSpec{Activation::Elu, a}; };
    auto make = [](std::vector<std::size_t> widths, std::vector<ActivationSpec> acts,
                   OptimizerKind opt, double lr, int p, double lambda,
                   std::vector<double> dropout) {
      TrainConfig c;
      c.widths = std::move(widths);
      c.activations = std::move(acts);
      c.optimizer = opt;
      c.learning_rate = lr;
      c.penalty.p = p;
      c.penalty.lambda = lambda;
      c.dropout = std::move(dropout);
      return c;
    };
    const auto adam = OptimizerKind::Adam;
    const auto sgd = OptimizerKind::Sgd;

    // Main study, n = 1000.
    m["ti1-model1-n1000"] = make({10, 15, 20, 15, 10}, {elu(0.1)}, adam, 1e-2, 2, 1e-5, {0.2});
    m["ti1-model2-n1000"] = make({10, 10}, {relu}, adam, 2e-2, 2, 1e-3, {0.2});
    m["ti1-model3-n1000"] = make({20, 20}, {elu(0.1), selu}, adam, 2e-1, 2, 1e-5, {0.2});
    m["ti1-model4-n1000"] = make({10, 10}, {selu}, adam, 2e-1, 2, 1e-5, {0.2});
    // Main study, n = 200.
    m["ti1-model1-n200"] = make({10, 10}, {selu}, adam, 2e-1, 2, 1e-2, {0.2});
    m["ti1-model2-n200"] = make({10, 10}, {relu}, adam, 2e-2, 2, 0.41, {0.2});
    m["ti1-model3-n200"] = make({10, 15, 10}, {selu}, adam, 1e-3, 2, 0.61, {0.1});
    m["ti1-model4-n200"] = make({10, 10}, {relu}, adam, 2e-1, 2, 1e-4, {0.2});
    // High-dimensional covariates.
    m["ti2-model5"] = make({20}, {elu(0.1)}, sgd, 2e-1, 2, 0.56, {0.2});
    m["ti2-model6"] = make({20}, {selu}, adam, 2e-1, 2, 0.1, {0.2});
    // Censoring study.
    m["ti3-model4-cens10"] = make({10, 10}, {selu}, adam, 2e-1, 2, 1e-5, {0.2});
    m["ti3-model4-cens20"] = make({20}, {selu}, adam, 3e-3, 2, 1e-4, {0.2});
    m["ti3-model5-cens0"] = make({20, 20}, {elu(0.7)}, sgd, 1e-2, 1, 0.061, {0.1, 0.15});
    m["ti3-model5-cens15"] = make({20, 20}, {elu(0.7)}, sgd, 1e-2, 1, 0.061, {0.1, 0.15});
    m["ti3-model5-cens30"] = make({20, 20, 20}, {elu(0.7)}, sgd, 1e-1, 1, 0.05, {0.1, 0.15, 0.15});
    m["ti3-model6-cens0"] = make({20, 20}, {elu(0.5)}, sgd, 1e-2, 1, 0.061, {0.1, 0.15});
    m["ti3-model6-cens15"] = make({20, 20}, {elu(0.5)}, sgd, 1e-2, 1, 0.061, {0.1, 0.15});
    m["ti3-model6-cens30"] = make({20, 20}, {elu(0.5)}, sgd, 1e-2, 1, 0.061, {0.1, 0.15});
    // Measurement-shift study (grids A through D of the model6 presets).
    m["ti4-gridA"] = make({20, 20}, {elu(0.5)}, adam, 1e-2, 1, 0.061, {0.1, 0.15});
    m["ti4-gridB"] = make({20, 20}, {elu(0.5)}, adam, 1e-2, 1, 7e-4, {0.1, 0.15});
    m["ti4-gridC"] = make({20, 20}, {elu(0.5)}, adam, 1e-2, 1, 0.08, {0.1, 0.15});
    m["ti4-gridD"] = make({20, 20}, {elu(1.5)}, adam, 1e-2, 1, 1e-4, {0.1, 0.15});
    return m;
  }();
  return presets;
}

inline TrainConfig train_preset(const std::string& name) {
  std::string key = name;
  // The n=1000 settings of the main study are the usual starting point, so the
  // suffix-free names alias them.
  static const std::map<std::string, std::string> aliases = {
      {"ti1-model1", "ti1-model1-n1000"},
      {"ti1-model2", "ti1-model2-n1000"},
      {"ti1-model3", "ti1-model3-n1000"},
      {"ti1-model4", "ti1-model4-n1000"},
  };
  const auto alias = aliases.find(key);
  if (alias != aliases.end()) key = alias->second;
  const auto it = train_presets().find(key);
  if (it == train_presets().end())
    throw std::invalid_argument("unknown training preset '" + name + "'");
  return it->second;
}

}  // namespace deephazard
