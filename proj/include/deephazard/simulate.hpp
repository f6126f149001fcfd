#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/rng.hpp"

namespace deephazard {

// Covariate process: Z(t) = sqrt(t) z0 up to the plateau at t = 0.6, constant
// afterwards, componentwise.
constexpr double kCovariatePlateau = 0.6;

inline std::vector<double> covariate_path(const std::vector<double>& z0, double t) {
  if (t < 0.0) throw std::invalid_argument("covariate_path: t must be >= 0");
  const double s = std::sqrt(std::min(t, kCovariatePlateau));
  std::vector<double> z(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) z[i] = s * z0[i];
  return z;
}

// A data-generating model: baseline hazard, excess hazard h(t, Z(t)), and the
// per-coordinate uniform bounds of the covariate base vector z0.
struct SimModelSpec {
  std::string name;
  std::size_t dim = 0;
  std::vector<std::pair<double, double>> z0_bounds;  // one per coordinate
  std::function<double(double)> baseline;                                // lambda_0(t)
  std::function<double(double, const std::vector<double>&)> excess;      // h(t, Z(t))

  std::vector<double> draw_z0(Rng& rng) const {
    std::vector<double> z0(dim);
    for (std::size_t i = 0; i < dim; ++i) z0[i] = rng.uniform(z0_bounds[i].first, z0_bounds[i].second);
    return z0;
  }
  double total_hazard(double t, const std::vector<double>& z0) const {
    return baseline(t) + excess(t, covariate_path(z0, t));
  }
};

namespace detail {

inline double cubic_baseline(double t) { return 4.0 * t * t * t; }

// Adaptive Simpson with the classic error estimate |S2 - S1| < 15 eps.
inline double simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                          double fb, double m, double fm, double whole, double eps, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Once the split disagrees by only a few ulps of the local mass, the estimate
  // is dominated by roundoff and refining further cannot improve it; without
  // this floor a large-magnitude integrand recurses to full depth everywhere.
  const double noise = 1e-14 * (std::abs(left) + std::abs(right));
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps || std::abs(delta) <= noise)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, 48);
}

}  // namespace detail

// Integrated total hazard int_0^t (lambda_0 + h) du, adaptive Simpson to
// absolute tolerance 1e-10 with a forced node at the covariate plateau (the
// integrand has a kink there). A negative integrand means the hazard model is
// invalid on this draw; generation aborts rather than producing invalid data.
inline double cumulative_hazard_true(const SimModelSpec& spec, const std::vector<double>& z0,
                                     double t) {
  if (t < 0.0) throw std::invalid_argument("cumulative_hazard_true: t must be >= 0");
  if (t == 0.0) return 0.0;
  const std::function<double(double)> integrand = [&](double u) {
    const double v = spec.total_hazard(u, z0);
    if (v < 0.0)
      throw std::runtime_error("negative total hazard " + std::to_string(v) + " at t=" +
                               std::to_string(u) + " for " + spec.name +
                               "; covariate draw outside the model's support");
    return v;
  };
  constexpr double tol = 1e-10;
  if (t <= kCovariatePlateau) return detail::adaptive_simpson(integrand, 0.0, t, tol);
  return detail::adaptive_simpson(integrand, 0.0, kCovariatePlateau, 0.5 * tol) +
         detail::adaptive_simpson(integrand, kCovariatePlateau, t, 0.5 * tol);
}

// Hard cap on the root-finding bracket. The shipped models all have a 4t^3
// baseline, so the needed time never approaches it; a draw that does exceed it
// is returned at the cap and flagged, to be administratively censored later.
constexpr double kHorizonMax = 1e3;

// Inverse-transform sampling: the event time solves exp(-Lambda(t)) = omega.
// Bracketing doubles from 1 until Lambda exceeds -log(omega), then bisection
// to absolute time tolerance 1e-10 (Lambda is nondecreasing, root unique).
inline double sample_event_time(const SimModelSpec& spec, const std::vector<double>& z0,
                                double omega, bool* beyond_support = nullptr) {
  if (!(omega > 0.0) || !(omega < 1.0))
    throw std::invalid_argument("sample_event_time: omega must lie in (0,1)");
  if (beyond_support) *beyond_support = false;
  const double target = -std::log(omega);
  double hi = 1.0;
  while (cumulative_hazard_true(spec, z0, hi) < target) {
    hi *= 2.0;
    if (hi > kHorizonMax) {
      if (beyond_support) *beyond_support = true;
      return kHorizonMax;
    }
  }
  double lo = 0.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (cumulative_hazard_true(spec, z0, mid) >= target)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Censoring scale c for C ~ U(0, c): given pilot event times, the expected
// censored fraction is E[min(T/c, 1)], decreasing in c, so bisection lands the
// target. Target 0 disables censoring entirely.
inline double calibrate_censoring(const SimModelSpec& spec, double target_level,
                                  std::size_t n_pilot, Rng& rng) {
  if (target_level < 0.0 || target_level >= 1.0)
    throw std::invalid_argument("calibrate_censoring: target level must lie in [0,1)");
  if (target_level == 0.0) return std::numeric_limits<double>::infinity();
  if (n_pilot == 0) throw std::invalid_argument("calibrate_censoring: need pilot draws");

  std::vector<double> pilot;
  pilot.reserve(n_pilot);
  for (std::size_t k = 0; k < n_pilot; ++k) {
    Rng sub = rng.substream(k);
    const std::vector<double> z0 = spec.draw_z0(sub);
    pilot.push_back(sample_event_time(spec, z0, sub.uniform_open()));
  }
  const auto censored_fraction = [&](double c) {
    double acc = 0.0;
    for (double t : pilot) acc += std::min(t / c, 1.0);
    return acc / static_cast<double>(pilot.size());
  };

  double lo = 1e-12, hi = 1.0;
  while (censored_fraction(hi) > target_level) {
    hi *= 2.0;
    if (hi > 1e12)
      throw std::runtime_error("calibrate_censoring: target censoring level unattainable");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censored_fraction(mid) > target_level)
      lo = mid;
    else
      hi = mid;
  }
  const double c = 0.5 * (lo + hi);
  const double achieved = censored_fraction(c);
  if (std::abs(achieved - target_level) > 0.01)
    throw std::runtime_error("calibrate_censoring: pilot fraction " + std::to_string(achieved) +
                             " misses target " + std::to_string(target_level));
  return c;
}

struct SimOutput {
  std::vector<SurvivalRecord> records;
  std::vector<std::vector<double>> z0;  // per-subject base covariates
  SimModelSpec spec;
  double censoring_scale = std::numeric_limits<double>::infinity();
  double achieved_censoring = 0.0;
  std::uint64_t seed = 0;

  // Exact true conditional survival, S(t | Z path of subject i).
  double true_survival(std::size_t i, double t) const {
    return std::exp(-cumulative_hazard_true(spec, z0[i], t));
  }
};

// Bulk evaluator for metric loops: per-subject cumulative hazard tabulated on
// a shared log-spaced grid (plateau forced in), linearly interpolated. Keeps
// oracle C-index and IMSPE runs off the adaptive integrator's slow path.
struct TrueSurvivalCache {
  std::vector<double> times;
  std::vector<std::vector<double>> cumhaz;  // one row per subject

  double survival(std::size_t i, double t) const {
    const auto& row = cumhaz[i];
    if (t <= 0.0) return 1.0;
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end()) return std::exp(-row.back());
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (times[k] == t || k == 0) return std::exp(-row[k]);
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return std::exp(-(row[k - 1] + w * (row[k] - row[k - 1])));
  }
};

inline TrueSurvivalCache make_true_survival_cache(const SimModelSpec& spec,
                                                  const std::vector<std::vector<double>>& z0s,
                                                  double max_time, std::size_t nodes = 2048) {
  if (!(max_time > 0.0)) throw std::invalid_argument("true survival cache: max_time must be positive");
  if (nodes < 16) throw std::invalid_argument("true survival cache: too few nodes");
  TrueSurvivalCache cache;
  cache.times.push_back(0.0);
  const double t_min = std::min(1e-7, max_time * 1e-7);
  const double ratio = std::pow(max_time / t_min, 1.0 / static_cast<double>(nodes - 1));
  double t = t_min;
  for (std::size_t k = 0; k < nodes; ++k, t *= ratio) cache.times.push_back(std::min(t, max_time));
  if (kCovariatePlateau < max_time) cache.times.push_back(kCovariatePlateau);
  std::sort(cache.times.begin(), cache.times.end());
  cache.times.erase(std::unique(cache.times.begin(), cache.times.end()), cache.times.end());

  cache.cumhaz.reserve(z0s.size());
  for (const auto& z0 : z0s) {
    std::vector<double> row(cache.times.size(), 0.0);
    double prev_t = cache.times[0];
    double prev_h = spec.total_hazard(prev_t, z0);
    for (std::size_t k = 1; k < cache.times.size(); ++k) {
      const double cur_t = cache.times[k];
      const double cur_h = spec.total_hazard(cur_t, z0);
      if (prev_h < 0.0 || cur_h < 0.0)
        throw std::runtime_error("negative total hazard while tabulating true survival for " +
                                 spec.name);
      row[k] = row[k - 1] + 0.5 * (cur_t - prev_t) * (prev_h + cur_h);
      prev_t = cur_t;
      prev_h = cur_h;
    }
    cache.cumhaz.push_back(std::move(row));
  }
  return cache;
}

// Full generator: per-subject substreams off the master seed make generation
// order-independent and reproducible. Substreams n+1.. feed the censoring
// calibration pilot so it never shares draws with the subjects.
inline SimOutput generate_dataset(const SimModelSpec& spec, std::size_t n, const TimeGrid& grid,
                                  double target_censoring, std::uint64_t seed,
                                  std::size_t n_pilot = 2000) {
  if (n == 0) throw std::invalid_argument("generate_dataset: n must be >= 1");
  grid.validate();
  Rng master(seed);

  SimOutput out;
  out.spec = spec;
  out.seed = seed;
  if (target_censoring > 0.0) {
    Rng pilot_rng = master.substream(n + 1);
    out.censoring_scale = calibrate_censoring(spec, target_censoring, n_pilot, pilot_rng);
  }

  std::size_t censored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng sub = master.substream(i);
    std::vector<double> z0 = spec.draw_z0(sub);
    const double omega = sub.uniform_open();
    const double T = sample_event_time(spec, z0, omega);
    double C = std::numeric_limits<double>::infinity();
    if (std::isfinite(out.censoring_scale)) C = sub.uniform(0.0, out.censoring_scale);

    SurvivalRecord rec;
    rec.id = "s" + std::to_string(i + 1);
    rec.x = std::min(T, C);
    rec.delta = T <= C ? 1 : 0;
    rec.covariates.reserve(grid.intervals());
    for (double tj : grid.points) rec.covariates.push_back(covariate_path(z0, tj));
    if (rec.delta == 0) ++censored;
    out.records.push_back(std::move(rec));
    out.z0.push_back(std::move(z0));
  }
  out.achieved_censoring = static_cast<double>(censored) / static_cast<double>(n);
  return out;
}

// The six shipped hazard models plus two degenerate specs used by tests.
inline SimModelSpec model_spec(const std::string& name) {
  SimModelSpec s;
  s.name = name;
  s.baseline = detail::cubic_baseline;
  const std::pair<double, double> u020{0.0, 20.0};
  if (name == "model1") {
    s.dim = 3;
    s.z0_bounds = {{0.0, 10.0}, {0.0, 20.0}, {0.0, 30.0}};
    s.excess = [](double, const std::vector<double>& z) {
      return z[0] * z[1] + z[0] * z[2] + z[0] * z[1] * z[2];
    };
  } else if (name == "model2") {
    s.dim = 3;
    s.z0_bounds = {u020, u020, u020};
    s.excess = [](double t, const std::vector<double>& z) {
      return std::cos(t) * z[0] * z[1] + std::abs(std::log(t + 1.0)) * z[0] * z[1] +
             t * t * t * z[2] * z[2];
    };
  } else if (name == "model3") {
    s.dim = 3;
    s.z0_bounds = {u020, u020, u020};
    s.excess = [](double t, const std::vector<double>& z) {
      const double z12 = z[0] * z[1];
      return std::cos(t) * z12 + std::abs(std::log(t + 1.0)) * z12 + t * t * t * z[2] * z[2] +
             std::cos(z[0] * z[2]) + z[0] * z[2] + (1.0 + t * t) / (t + 1.0) * z12 +
             z[0] * z[0] * z[0] * z[1] * z[1] * z[1] * z[1];
    };
  } else if (name == "model4") {
    s.dim = 3;
    s.z0_bounds = {u020, u020, u020};
    s.excess = [](double t, const std::vector<double>& z) {
      return z[0] * z[1] / (t + 1.0) + 1.0 / (z[0] * z[1] * z[2] * z[2] + 1.0);
    };
  } else if (name == "model5") {
    s.dim = 20;
    s.z0_bounds.assign(20, u020);
    s.z0_bounds[0] = {5.0, 20.0};
    s.z0_bounds[15] = s.z0_bounds[16] = s.z0_bounds[17] = {0.0, 1.0};
    s.z0_bounds[18] = s.z0_bounds[19] = {3.0, 4.0};
    s.excess = [](double t, const std::vector<double>& z) {
      return std::cos(t) * z[0] * z[1] + std::abs(std::log(t + 1.0)) * z[0] * z[1] +
             t * t * t * z[2] * z[2] + 1.0 / (1.0 + z[19] * z[0] + std::sqrt(t));
    };
  } else if (name == "model6") {
    s.dim = 20;
    s.z0_bounds.assign(20, u020);
    s.z0_bounds[0] = {5.0, 20.0};
    s.z0_bounds[3] = {3.0, 4.0};
    s.z0_bounds[15] = s.z0_bounds[16] = s.z0_bounds[17] = {0.0, 1.0};
    s.z0_bounds[18] = s.z0_bounds[19] = {3.0, 4.0};
    s.excess = [](double t, const std::vector<double>& z) {
      return std::cos(t) * z[0] * z[1] + std::abs(std::log(t + 1.0)) * z[2] * z[3] +
             t * t * t * z[4] * z[4] + std::cos(z[5] * z[6]) + z[7] * z[8] +
             (1.0 + t * t) / (t + 1.0) * z[9] * z[10] +
             z[11] * z[11] * z[11] * z[12] * z[12] * z[12] * z[12] +
             1.0 / (1.0 + z[19] * z[13] + std::sqrt(t));
    };
  } else if (name == "pure-baseline") {
    s.dim = 1;
    s.z0_bounds = {{0.0, 1.0}};
    s.excess = [](double, const std::vector<double>&) { return 0.0; };
  } else if (name == "constant-hazard") {
    s.dim = 1;
    s.z0_bounds = {{0.0, 1.0}};
    s.baseline = [](double) { return 1.0; };
    s.excess = [](double, const std::vector<double>&) { return 0.0; };
  } else {
    throw std::invalid_argument("unknown simulation model '" + name + "'");
  }
  return s;
}

}  // namespace deephazard
