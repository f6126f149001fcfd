#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/network.hpp"
#include "deephazard/train.hpp"

namespace deephazard {

struct SurvivalCurve {
  std::string id;
  std::vector<double> eval_times;  // ascending
  std::vector<double> values;      // S-hat, in [0,1]
};

// Forward risk propagation for one subject: interval j's features are the
// covariates at t_j followed by the risks of all earlier intervals. Truncating
// the model to its first k intervals therefore reproduces the first k risks.
inline std::vector<double> risk_path(const DeepHazardModel& model,
                                     const std::vector<std::vector<double>>& covariates) {
  const std::size_t m1 = model.networks.size();
  if (covariates.size() != m1)
    throw std::invalid_argument("risk_path: expected one covariate vector per grid point");
  std::vector<double> risks;
  risks.reserve(m1);
  for (std::size_t j = 0; j < m1; ++j) {
    std::vector<double> z = covariates[j];
    z.insert(z.end(), risks.begin(), risks.end());
    if (z.size() != model.networks[j].input_dim)
      throw std::invalid_argument("risk_path: covariate dimension does not match trained network " +
                                  std::to_string(j));
    Matrix x(1, z.size());
    x.data = std::move(z);
    risks.push_back(forward_eval(model.networks[j], x).front());
  }
  return risks;
}

// Cumulative predicted risk in the exponent of the survival curve. Interval 0
// covers [0, t_1): risk accrues from time zero, so the first interval
// contributes h_0 * t_1 in full and the boundaries are s_0 = 0, s_l = t_l.
inline double cumulative_risk(const TimeGrid& grid, const std::vector<double>& risks, double t) {
  const std::size_t j = grid.interval_index(t);
  double acc = 0.0;
  double lower = 0.0;
  for (std::size_t l = 0; l < j; ++l) {
    const double next = grid.points[l + 1];
    acc += risks[l] * (next - lower);
    lower = next;
  }
  acc += risks[j] * (t - lower);
  return acc;
}

// -log S-hat before clamping; exposed separately because the telescoping
// structure only holds on this scale.
inline double neg_log_survival(const DeepHazardModel& model, const std::vector<double>& risks,
                               double t) {
  if (t < 0.0 || t > model.grid.tau)
    throw std::invalid_argument("survival: t must lie in [0, tau]");
  if (risks.size() != model.grid.intervals())
    throw std::invalid_argument("survival: risk path length mismatch");
  return model.baseline.value_at(t) + cumulative_risk(model.grid, risks, t);
}

inline double survival_at(const DeepHazardModel& model, const std::vector<double>& risks,
                          double t) {
  const double s = std::exp(-neg_log_survival(model, risks, t));
  return std::clamp(s, 0.0, 1.0);
}

// Running minimum; idempotent, never increases a value.
inline SurvivalCurve monotonize(SurvivalCurve curve) {
  double running = 1.0;
  for (double& v : curve.values) {
    running = std::min(running, v);
    v = running;
  }
  return curve;
}

// Curve on the union of the baseline knots (training times and grid points)
// and the requested times, monotonized there, then restricted back to the
// requested times. Evaluating on the union first means the running minimum
// sees every knot of the piecewise structure, not just the requested samples.
inline SurvivalCurve survival_curve(const DeepHazardModel& model, const std::vector<double>& risks,
                                    std::vector<double> times, std::string id = {}) {
  for (double t : times)
    if (t < 0.0 || t > model.grid.tau)
      throw std::invalid_argument("survival_curve: times must lie in [0, tau]");
  std::vector<double> grid_times{0.0};
  for (double k : model.baseline.knots)
    if (k <= model.grid.tau) grid_times.push_back(k);
  grid_times.insert(grid_times.end(), times.begin(), times.end());
  std::sort(grid_times.begin(), grid_times.end());
  grid_times.erase(std::unique(grid_times.begin(), grid_times.end()), grid_times.end());

  SurvivalCurve full;
  full.eval_times = grid_times;
  full.values.reserve(grid_times.size());
  for (double t : grid_times) full.values.push_back(survival_at(model, risks, t));
  full = monotonize(std::move(full));

  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  SurvivalCurve out;
  out.id = std::move(id);
  out.eval_times = times;
  out.values.reserve(times.size());
  for (double t : out.eval_times) {
    const auto it = std::lower_bound(grid_times.begin(), grid_times.end(), t);
    out.values.push_back(full.values[static_cast<std::size_t>(it - grid_times.begin())]);
  }
  return out;
}

// Var(T | Z) over the restricted horizon: int_0^tau 2 t S(t) dt - (int_0^tau
// S(t) dt)^2, trapezoid on the curve's own grid. Discretization can push the
// result slightly negative; clamped at zero, flagged through `clamped`.
inline double conditional_variance(const SurvivalCurve& curve, double tau,
                                   bool* clamped = nullptr) {
  if (curve.eval_times.size() != curve.values.size() || curve.eval_times.size() < 2)
    throw std::invalid_argument("conditional_variance: need at least two curve points");
  double first = 0.0, second = 0.0;
  for (std::size_t k = 0; k + 1 < curve.eval_times.size(); ++k) {
    const double a = std::min(curve.eval_times[k], tau);
    const double b = std::min(curve.eval_times[k + 1], tau);
    if (b <= a) continue;
    const double sa = curve.values[k], sb = curve.values[k + 1];
    first += 0.5 * (b - a) * (sa + sb);
    second += 0.5 * (b - a) * (2.0 * a * sa + 2.0 * b * sb);
  }
  const double var = second - first * first;
  if (clamped) *clamped = var < 0.0;
  return std::max(var, 0.0);
}

}  // namespace deephazard
