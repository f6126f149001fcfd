#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace deephazard {

// Measurement times t_0 < t_1 < ... < t_M plus the administrative horizon tau.
// Interval j is [t_j, t_{j+1}) with t_{M+1} = tau for loss purposes; the risk
// learned on interval 0 also covers [0, t_0) when predicting, because survival
// accrues from time zero.
struct TimeGrid {
  std::vector<double> points;
  double tau = 0.0;

  TimeGrid() = default;
  TimeGrid(std::vector<double> pts, double tau_) : points(std::move(pts)), tau(tau_) {
    validate();
  }

  void validate() const {
    if (points.empty()) throw std::invalid_argument("TimeGrid: needs at least one point");
    if (points.front() < 0.0) throw std::invalid_argument("TimeGrid: t_0 must be >= 0");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i] > points[i - 1]))
        throw std::invalid_argument("TimeGrid: points must be strictly increasing");
    if (!(tau > points.back()))
      throw std::invalid_argument("TimeGrid: tau must exceed the last grid point");
  }

  std::size_t intervals() const { return points.size(); }  // M + 1

  // Right boundary of interval j (tau for the last interval).
  double upper(std::size_t j) const {
    return j + 1 < points.size() ? points[j + 1] : tau;
  }

  // Interval containing time u: largest j with t_j <= u, and 0 for u < t_0.
  // Used for both baseline integration and prediction, where interval 0 is
  // extended down to time zero.
  std::size_t interval_index(double u) const {
    auto it = std::upper_bound(points.begin(), points.end(), u);
    if (it == points.begin()) return 0;
    return static_cast<std::size_t>(it - points.begin() - 1);
  }
};

// One subject: censored event time x = min(T, C), event indicator delta, and the
// covariate vector at each grid point.
struct SurvivalRecord {
  std::string id;
  double x = 0.0;
  int delta = 0;
  std::vector<std::vector<double>> covariates;  // size M+1, each of dimension p

  std::size_t dim() const { return covariates.empty() ? 0 : covariates.front().size(); }
};

inline void validate_records(const std::vector<SurvivalRecord>& records, const TimeGrid& grid) {
  if (records.empty()) throw std::invalid_argument("dataset: no records");
  const std::size_t p = records.front().dim();
  for (const auto& r : records) {
    if (!(r.x >= 0.0) || !std::isfinite(r.x))
      throw std::invalid_argument("record " + r.id + ": time must be finite and >= 0");
    if (r.delta != 0 && r.delta != 1)
      throw std::invalid_argument("record " + r.id + ": event indicator must be 0 or 1");
    if (r.covariates.size() != grid.intervals())
      throw std::invalid_argument("record " + r.id + ": expected one covariate vector per grid point");
    for (const auto& z : r.covariates)
      if (z.size() != p)
        throw std::invalid_argument("record " + r.id + ": inconsistent covariate dimension");
  }
}

// Administrative truncation at tau: events at or after the horizon count as
// censored at the horizon, since the loss integrates only to tau.
inline void truncate_at_horizon(std::vector<SurvivalRecord>& records, const TimeGrid& grid) {
  for (auto& r : records) {
    if (r.x >= grid.tau) {
      r.x = grid.tau;
      r.delta = 0;
    }
  }
}

// Interval-j view of one subject: truncated time, modified indicator, and the
// augmented features (covariates at t_j followed by the prior interval risks).
struct WorkingRecord {
  std::size_t source = 0;  // index into the original record list
  double x_j = 0.0;
  int delta_j = 0;
  std::vector<double> z_tilde;  // dimension p + j
};

struct WorkingDataset {
  std::size_t j = 0;
  double t_j = 0.0;
  double t_next = 0.0;
  std::size_t n_total = 0;            // size of the full training set (loss normalizer)
  std::vector<WorkingRecord> records; // sorted ascending by x_j
  std::size_t n_j() const { return records.size(); }
};

// Builds D_j. Subjects dead or censored before t_j are excluded; subjects still
// at risk at t_{j+1} are censored there; everyone else keeps their outcome.
// prior_risks[i] must hold subject i's risks for intervals 0..j-1.
inline WorkingDataset build_working_dataset(const std::vector<SurvivalRecord>& records,
                                            const TimeGrid& grid, std::size_t j,
                                            const std::vector<std::vector<double>>& prior_risks) {
  if (j >= grid.intervals()) throw std::invalid_argument("build_working_dataset: interval out of range");
  if (prior_risks.size() != records.size())
    throw std::invalid_argument("build_working_dataset: prior_risks must have one entry per record");
  const double t_j = grid.points[j];
  const double t_next = grid.upper(j);

  WorkingDataset ds;
  ds.j = j;
  ds.t_j = t_j;
  ds.t_next = t_next;
  ds.n_total = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.x < t_j) continue;
    if (prior_risks[i].size() != j)
      throw std::invalid_argument("build_working_dataset: prior_risks entry has wrong length; "
                                  "intervals must be built in order");
    WorkingRecord w;
    w.source = i;
    if (r.x >= t_next) {
      w.x_j = t_next;
      w.delta_j = 0;
    } else {
      w.x_j = r.x;
      w.delta_j = r.delta;
    }
    w.z_tilde.reserve(r.covariates[j].size() + j);
    w.z_tilde = r.covariates[j];
    w.z_tilde.insert(w.z_tilde.end(), prior_risks[i].begin(), prior_risks[i].end());
    ds.records.push_back(std::move(w));
  }
  if (ds.records.empty())
    throw std::runtime_error("no at-risk subjects in interval " + std::to_string(j) +
                             "; shorten the grid so the last time points keep enough subjects");
  // Ascending time; events before censorings at tied times; original order last.
  // The gaps between tied times are zero, so the loss value does not depend on
  // this choice, but a fixed order keeps runs bit-identical.
  std::sort(ds.records.begin(), ds.records.end(), [](const WorkingRecord& a, const WorkingRecord& b) {
    if (a.x_j != b.x_j) return a.x_j < b.x_j;
    if (a.delta_j != b.delta_j) return a.delta_j > b.delta_j;
    return a.source < b.source;
  });
  return ds;
}

// #{i : x_j_i >= t}, by binary search on the sorted times.
inline std::size_t at_risk_count(const WorkingDataset& ds, double t) {
  if (t < ds.t_j || t > ds.t_next)
    throw std::invalid_argument("at_risk_count: t outside the interval");
  auto it = std::lower_bound(ds.records.begin(), ds.records.end(), t,
                             [](const WorkingRecord& w, double v) { return w.x_j < v; });
  return static_cast<std::size_t>(ds.records.end() - it);
}

// Maps measurements taken at arbitrary times onto the grid: each grid point
// takes the value measured nearest to it, earlier measurement on ties.
inline std::vector<std::vector<double>> align_to_grid(const std::vector<double>& measured_times,
                                                      const std::vector<std::vector<double>>& measured_values,
                                                      const TimeGrid& grid) {
  if (measured_times.empty()) throw std::invalid_argument("align_to_grid: no measurements");
  if (measured_times.size() != measured_values.size())
    throw std::invalid_argument("align_to_grid: times/values length mismatch");
  for (std::size_t i = 1; i < measured_times.size(); ++i)
    if (measured_times[i] < measured_times[i - 1])
      throw std::invalid_argument("align_to_grid: measurement times must be sorted");

  std::vector<std::vector<double>> out;
  out.reserve(grid.intervals());
  for (double t : grid.points) {
    auto it = std::lower_bound(measured_times.begin(), measured_times.end(), t);
    std::size_t best;
    if (it == measured_times.begin()) {
      best = 0;
    } else if (it == measured_times.end()) {
      best = measured_times.size() - 1;
    } else {
      const std::size_t hi = static_cast<std::size_t>(it - measured_times.begin());
      const std::size_t lo = hi - 1;
      // strict '<' keeps the earlier measurement when distances tie
      best = (t - measured_times[lo] <= measured_times[hi] - t) ? lo : hi;
    }
    out.push_back(measured_values[best]);
  }
  return out;
}

}  // namespace deephazard
