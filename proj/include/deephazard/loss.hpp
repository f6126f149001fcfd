#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/step_function.hpp"

namespace deephazard {

struct LossBreakdown {
  double data_term = 0.0;
  double penalty_term = 0.0;
  double total() const { return data_term + penalty_term; }
};

// Mean of h over the at-risk set {i : x_j_i >= t}. A step function of t with
// jumps only at the sorted x values.
inline double mean_risk_at(const std::vector<double>& h, const WorkingDataset& ds, double t) {
  if (h.size() != ds.n_j()) throw std::invalid_argument("mean_risk_at: risk vector length mismatch");
  const std::size_t n_at = at_risk_count(ds, t);
  if (n_at == 0) throw std::invalid_argument("mean_risk_at: empty risk set");
  double s = 0.0;
  for (std::size_t i = ds.n_j() - n_at; i < ds.n_j(); ++i) s += h[i];
  return s / static_cast<double>(n_at);
}

namespace detail {

// Shared precomputation over one sorted working dataset. Tied times form
// groups; the at-risk set at x_i is everyone from the group's first index on.
struct LossWorkspace {
  std::vector<std::size_t> group_first, group_last;
  std::vector<double> at_risk;   // m_i, tie-inclusive
  std::vector<double> hbar;      // risk-set mean at x_i
  std::vector<double> gap;       // x_i - x_{i-1}, with x_0 = t_j; zero inside tie groups
  std::vector<double> prefix_hbar_gap;    // B_i = sum_{r<=i} hbar_r * gap_r
  std::vector<double> prefix_hbar2_gap;   // C_i = sum_{r<=i} hbar_r^2 * gap_r
  std::vector<double> prefix_event_term;  // D_i = sum_{x_r <= x_i} delta_r / m_r
};

inline LossWorkspace make_workspace(const std::vector<double>& h, const WorkingDataset& ds) {
  const std::size_t n = ds.n_j();
  if (h.size() != n) throw std::invalid_argument("interval_loss: risk vector length mismatch");
  for (std::size_t i = 1; i < n; ++i)
    if (ds.records[i].x_j < ds.records[i - 1].x_j)
      throw std::invalid_argument("interval_loss: dataset must be sorted by time");

  LossWorkspace w;
  w.group_first.resize(n);
  w.group_last.resize(n);
  w.at_risk.resize(n);
  w.hbar.resize(n);
  w.gap.resize(n);
  w.prefix_hbar_gap.resize(n);
  w.prefix_hbar2_gap.resize(n);
  w.prefix_event_term.resize(n);

  for (std::size_t i = 0; i < n; ++i)
    w.group_first[i] = (i > 0 && ds.records[i].x_j == ds.records[i - 1].x_j)
                           ? w.group_first[i - 1] : i;
  for (std::size_t i = n; i-- > 0;)
    w.group_last[i] = (i + 1 < n && ds.records[i].x_j == ds.records[i + 1].x_j)
                          ? w.group_last[i + 1] : i;

  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + h[i];
  for (std::size_t i = 0; i < n; ++i) {
    w.at_risk[i] = static_cast<double>(n - w.group_first[i]);
    w.hbar[i] = suffix[w.group_first[i]] / w.at_risk[i];
    w.gap[i] = ds.records[i].x_j - (i == 0 ? ds.t_j : ds.records[i - 1].x_j);
  }
  double b = 0.0, c = 0.0, d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    b += w.hbar[i] * w.gap[i];
    c += w.hbar[i] * w.hbar[i] * w.gap[i];
    d += ds.records[i].delta_j / w.at_risk[i];
    w.prefix_hbar_gap[i] = b;
    w.prefix_hbar2_gap[i] = c;
    w.prefix_event_term[i] = d;
  }
  return w;
}

}  // namespace detail

// Data term of the interval loss:
//   (1/2n) sum_i sum_{r<=i} [h_i - hbar(x_r)]^2 (x_r - x_{r-1})
//   - (1/n) sum_i [h_i - hbar(x_i)] delta_i,       x_0 = t_j,
// where n is the size of the full training set, not n_j. The inner quadratic
// sums telescope: sum_{r<=i} gap_r = x_i - t_j, so each record costs O(1) after
// the prefix pass.
inline double interval_loss(const std::vector<double>& h, const WorkingDataset& ds) {
  const auto w = detail::make_workspace(h, ds);
  const double n = static_cast<double>(ds.n_total);
  double quad = 0.0, ev = 0.0;
  for (std::size_t i = 0; i < ds.n_j(); ++i) {
    const double span = ds.records[i].x_j - ds.t_j;
    quad += h[i] * h[i] * span - 2.0 * h[i] * w.prefix_hbar_gap[i] + w.prefix_hbar2_gap[i];
    ev += (h[i] - w.hbar[i]) * ds.records[i].delta_j;
  }
  return quad / (2.0 * n) - ev / n;
}

// Exact gradient of interval_loss with respect to h, differentiating through
// hbar. The quadratic term's hbar-sensitivity cancels: at a gap with nonzero
// width the inner sum runs over a full risk set, where the centered residuals
// sum to zero; within tie groups the gap itself is zero. What survives is
//   dL/dh_k = (1/n) [ h_k (x_k - t_j) - B_k - delta_k + D_k ],
// with D_k summing delta_i / m_i over all x_i <= x_k (whole tie groups).
inline std::vector<double> interval_loss_grad(const std::vector<double>& h,
                                              const WorkingDataset& ds) {
  const auto w = detail::make_workspace(h, ds);
  const double n = static_cast<double>(ds.n_total);
  std::vector<double> g(ds.n_j());
  for (std::size_t k = 0; k < ds.n_j(); ++k) {
    const double span = ds.records[k].x_j - ds.t_j;
    const double d_k = w.prefix_event_term[w.group_last[k]];
    g[k] = (h[k] * span - w.prefix_hbar_gap[k] - ds.records[k].delta_j + d_k) / n;
  }
  return g;
}

// Full-sample decomposition of the least-squares contrast over [0, tau]:
//   gamma(f) = -(1/n) sum_i int f dN_i + (1/2n) sum_i int f^2 Y_i dt
// at f = lambda0 + h splits into gamma1 + gamma2 + gamma3 with gamma3 = 0
// identically (the centered risks sum to zero over every risk set). Evaluated
// by exact step integration; diagnostic only, training minimizes the interval
// losses.
struct GammaTerms {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
};

inline GammaTerms gamma_decomposition(const std::vector<std::vector<double>>& risk_matrix,
                                      const StepFunction& lambda0,
                                      const std::vector<SurvivalRecord>& records,
                                      const TimeGrid& grid) {
  const std::size_t n = records.size();
  if (risk_matrix.size() != n)
    throw std::invalid_argument("gamma_decomposition: risk matrix row count mismatch");
  for (const auto& row : risk_matrix)
    if (row.size() != grid.intervals())
      throw std::invalid_argument("gamma_decomposition: risk matrix needs one column per interval");

  // Breakpoints of every piecewise-constant ingredient.
  std::vector<double> cuts{0.0, grid.tau};
  for (const auto& r : records)
    if (r.x < grid.tau) cuts.push_back(r.x);
  for (double t : grid.points)
    if (t < grid.tau) cuts.push_back(t);
  for (double t : lambda0.knots)
    if (t > 0.0 && t < grid.tau) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  GammaTerms out;
  const double nd = static_cast<double>(n);

  // Integral parts, segment by segment; everything is constant on (a, b).
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double len = b - a;
    if (len <= 0.0) continue;
    const std::size_t j = grid.interval_index(a);
    const double l0 = lambda0.value_at(a);
    double sum_h = 0.0;
    std::size_t at_risk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (records[i].x >= b) {  // Y_i = 1 on the open segment
        sum_h += risk_matrix[i][j];
        ++at_risk;
      }
    }
    if (at_risk == 0) continue;
    const double hbar = sum_h / static_cast<double>(at_risk);
    const double base = l0 + hbar;
    out.gamma1 += 0.5 * static_cast<double>(at_risk) * base * base * len / nd;
    double centered_sq = 0.0, centered = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (records[i].x >= b) {
        const double cgap = risk_matrix[i][j] - hbar;
        centered_sq += cgap * cgap;
        centered += cgap;
      }
    }
    out.gamma2 += 0.5 * centered_sq * len / nd;
    out.gamma3 += centered * base * len / nd;
  }

  // Counting-process parts: jumps at observed events up to tau.
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].delta != 1 || records[i].x > grid.tau) continue;
    const double t = records[i].x;
    const std::size_t j = grid.interval_index(t);
    double sum_h = 0.0;
    std::size_t at_risk = 0;
    for (std::size_t l = 0; l < n; ++l) {
      if (records[l].x >= t) {
        sum_h += risk_matrix[l][j];
        ++at_risk;
      }
    }
    const double hbar = sum_h / static_cast<double>(at_risk);
    out.gamma1 -= (lambda0.value_at(t) + hbar) / nd;
    out.gamma2 -= (risk_matrix[i][j] - hbar) / nd;
  }
  return out;
}

}  // namespace deephazard
