#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deephazard/step_function.hpp"

namespace deephazard {

// Time-dependent concordance: pairs are comparable when the earlier time is an
// event (t_i < t_j, delta_i = 1), plus tied-time pairs where only i is an event
// (t_i = t_j, delta_i = 1, delta_j = 0). Both subjects' survival is evaluated
// at the earlier event time; a lower value for the failing subject is
// concordant, ties count one half.
inline double c_index_td(const std::vector<double>& times, const std::vector<int>& deltas,
                         const std::function<double(std::size_t, double)>& survival) {
  const std::size_t n = times.size();
  if (deltas.size() != n) throw std::invalid_argument("c_index_td: times/deltas length mismatch");
  if (n < 2) throw std::invalid_argument("c_index_td: need at least 2 subjects");
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (deltas[i] != 1) continue;
    const double si = survival(i, times[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool comparable =
          times[i] < times[j] || (times[i] == times[j] && deltas[j] == 0);
      if (!comparable) continue;
      ++pairs;
      const double sj = survival(j, times[i]);
      if (si < sj)
        num += 1.0;
      else if (si == sj)
        num += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("c_index_td: no comparable pairs");
  return num / static_cast<double>(pairs);
}

// Classical concordance on scalar risk scores: among pairs where i' fails
// before i, the earlier failure should carry the higher risk.
inline double c_index_traditional(const std::vector<double>& times, const std::vector<int>& deltas,
                                  const std::vector<double>& risks) {
  const std::size_t n = times.size();
  if (deltas.size() != n || risks.size() != n)
    throw std::invalid_argument("c_index_traditional: input length mismatch");
  if (n < 2) throw std::invalid_argument("c_index_traditional: need at least 2 subjects");
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(times[i] > times[k]) || deltas[k] != 1) continue;
      ++pairs;
      if (risks[i] < risks[k])
        num += 1.0;
      else if (risks[i] == risks[k])
        num += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("c_index_traditional: no comparable pairs");
  return num / static_cast<double>(pairs);
}

// Time-averaged mean squared error between predicted and true survival,
// trapezoid over a uniform grid on [0, tau].
inline double imspe(const std::function<double(std::size_t, double)>& predicted,
                    const std::function<double(std::size_t, double)>& truth, std::size_t n,
                    double tau, std::size_t grid_size = 200) {
  if (n == 0) throw std::invalid_argument("imspe: need at least one subject");
  if (grid_size < 2) throw std::invalid_argument("imspe: grid_size must be >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("imspe: tau must be positive");
  double integral = 0.0;
  double prev_t = 0.0, prev_v = 0.0;
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double t = tau * static_cast<double>(k) / static_cast<double>(grid_size - 1);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = predicted(i, t) - truth(i, t);
      mse += d * d;
    }
    mse /= static_cast<double>(n);
    if (k > 0) integral += 0.5 * (t - prev_t) * (mse + prev_v);
    prev_t = t;
    prev_v = mse;
  }
  return integral / tau;
}

// Nelson-Aalen cumulative hazard as a right-continuous step function.
inline StepFunction nelson_aalen(const std::vector<double>& times, const std::vector<int>& deltas) {
  const std::size_t n = times.size();
  if (deltas.size() != n) throw std::invalid_argument("nelson_aalen: length mismatch");
  if (n == 0) throw std::invalid_argument("nelson_aalen: empty sample");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> knots, values;
  double acc = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    std::size_t events = 0;
    std::size_t k = i;
    while (k < n && times[order[k]] == t) {
      if (deltas[order[k]] == 1) ++events;
      ++k;
    }
    if (events > 0) {
      acc += static_cast<double>(events) / static_cast<double>(n - i);
      knots.push_back(t);
      values.push_back(acc);
    }
    i = k;
  }
  return StepFunction(std::move(knots), std::move(values));
}

// Kaplan-Meier survival estimate; value 1 before the first event.
inline StepFunction kaplan_meier(const std::vector<double>& times, const std::vector<int>& deltas) {
  const std::size_t n = times.size();
  if (deltas.size() != n) throw std::invalid_argument("kaplan_meier: length mismatch");
  if (n == 0) throw std::invalid_argument("kaplan_meier: empty sample");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> knots, values;
  double surv = 1.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = times[order[i]];
    std::size_t events = 0;
    std::size_t k = i;
    while (k < n && times[order[k]] == t) {
      if (deltas[order[k]] == 1) ++events;
      ++k;
    }
    if (events > 0) {
      surv *= 1.0 - static_cast<double>(events) / static_cast<double>(n - i);
      knots.push_back(t);
      values.push_back(surv);
    }
    i = k;
  }
  StepFunction s(std::move(knots), std::move(values));
  s.initial_value = 1.0;
  return s;
}

// Ratio of per-group Nelson-Aalen cumulative hazards at every event time where
// the reference group's estimate is positive. A flat series supports a
// proportional-hazards assumption between the groups; trends against it.
inline std::vector<std::pair<double, double>> ph_diagnostic(const std::vector<double>& times,
                                                            const std::vector<int>& deltas,
                                                            const std::vector<int>& group) {
  const std::size_t n = times.size();
  if (deltas.size() != n || group.size() != n)
    throw std::invalid_argument("ph_diagnostic: input length mismatch");
  std::vector<double> ta, tb;
  std::vector<int> da, db;
  for (std::size_t i = 0; i < n; ++i) {
    if (group[i] != 0 && group[i] != 1)
      throw std::invalid_argument("ph_diagnostic: group indicator must be 0 or 1");
    if (group[i] == 1) {
      ta.push_back(times[i]);
      da.push_back(deltas[i]);
    } else {
      tb.push_back(times[i]);
      db.push_back(deltas[i]);
    }
  }
  if (ta.empty() || std::find(da.begin(), da.end(), 1) == da.end())
    throw std::invalid_argument("ph_diagnostic: group 1 has no events");
  if (tb.empty() || std::find(db.begin(), db.end(), 1) == db.end())
    throw std::invalid_argument("ph_diagnostic: group 0 has no events");
  const StepFunction na = nelson_aalen(ta, da);
  const StepFunction nb = nelson_aalen(tb, db);

  std::vector<double> event_times;
  for (std::size_t i = 0; i < n; ++i)
    if (deltas[i] == 1) event_times.push_back(times[i]);
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

  std::vector<std::pair<double, double>> out;
  for (double t : event_times) {
    const double denom = nb.value_at(t);
    if (denom > 0.0) out.emplace_back(t, na.value_at(t) / denom);
  }
  return out;
}

}  // namespace deephazard
