#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/loss.hpp"
#include "deephazard/network.hpp"
#include "deephazard/optimizer.hpp"
#include "deephazard/rng.hpp"
#include "deephazard/step_function.hpp"

namespace deephazard {

// One configuration shared by all interval networks. Activation and dropout
// entries either match the layer count or hold a single value applied to every
// layer (the hyperparameter tables list both styles).
struct TrainConfig {
  std::vector<std::size_t> widths;
  std::vector<ActivationSpec> activations{{Activation::Relu, 1.0}};
  std::vector<double> dropout{0.0};
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-2;
  PenaltySpec penalty;
  std::size_t max_epochs = 1000;
  double early_stop = 1e-5;
  std::uint64_t seed = 0;

  std::vector<ActivationSpec> layer_activations() const {
    return broadcast(activations, widths.size(), "activations");
  }
  std::vector<double> layer_dropout() const {
    if (dropout.empty()) return std::vector<double>(widths.size(), 0.0);
    return broadcast(dropout, widths.size(), "dropout");
  }
  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning rate must be positive");
    if (early_stop < 0.0) throw std::invalid_argument("config: early-stopping threshold must be >= 0");
    if (penalty.lambda < 0.0) throw std::invalid_argument("config: penalty lambda must be >= 0");
    if (penalty.p != 1 && penalty.p != 2) throw std::invalid_argument("config: penalty p must be 1 or 2");
    layer_activations();
    for (double d : layer_dropout())
      if (d < 0.0 || d >= 1.0) throw std::invalid_argument("config: dropout rates must lie in [0,1)");
  }

 private:
  template <class T>
  static std::vector<T> broadcast(const std::vector<T>& v, std::size_t count, const char* what) {
    if (v.size() == count) return v;
    if (v.size() == 1) return std::vector<T>(count, v.front());
    throw std::invalid_argument(std::string("config: ") + what +
                                " must have one entry or one per layer");
  }
};

struct IntervalReport {
  std::size_t n_j = 0;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;
};

struct DeepHazardModel {
  TimeGrid grid;
  std::vector<IntervalNetwork> networks;  // one per interval, 0..M
  StepFunction baseline;                  // cumulative baseline hazard
  std::vector<std::vector<double>> risk_matrix;  // training risks, n x (M+1)
  std::vector<IntervalReport> reports;
};

inline Matrix features_of(const WorkingDataset& ds) {
  const std::size_t dim = ds.records.empty() ? 0 : ds.records.front().z_tilde.size();
  Matrix x(ds.n_j(), dim);
  for (std::size_t r = 0; r < ds.n_j(); ++r) {
    if (ds.records[r].z_tilde.size() != dim)
      throw std::invalid_argument("features_of: ragged feature vectors");
    std::copy(ds.records[r].z_tilde.begin(), ds.records[r].z_tilde.end(), &x.data[r * dim]);
  }
  return x;
}

// Full-batch training of one interval network. Stops early once the relative
// change of the total loss between consecutive epochs drops below the
// threshold. The loss is not batch-decomposable (the risk-set means couple all
// records), hence no minibatching.
inline IntervalNetwork train_interval_network(const WorkingDataset& ds, const TrainConfig& cfg,
                                              Rng& rng, IntervalReport* report = nullptr) {
  if (ds.n_j() < 2) throw std::invalid_argument("train_interval_network: need at least 2 at-risk records");
  cfg.validate();
  const Matrix feats = features_of(ds);
  IntervalNetwork net = make_network(feats.cols, cfg.widths, cfg.layer_activations(),
                                     cfg.layer_dropout(), rng);
  Optimizer opt(cfg.optimizer, cfg.learning_rate);

  double prev = 0.0;
  bool have_prev = false;
  std::size_t epochs = 0;
  double last_total = 0.0;
  if (report) report->loss_curve.clear();
  for (std::size_t e = 0; e < cfg.max_epochs; ++e) {
    ForwardTape tape;
    const std::vector<double> h = forward(net, feats, ForwardMode::Train, &rng, &tape);
    LossBreakdown loss;
    loss.data_term = interval_loss(h, ds);
    loss.penalty_term = penalty_value(cfg.penalty, net);
    const double total = loss.total();
    if (!std::isfinite(total))
      throw std::runtime_error("training diverged at epoch " + std::to_string(e) +
                               " (loss not finite; learning rate " +
                               std::to_string(cfg.learning_rate) + ")");
    const std::vector<double> gh = interval_loss_grad(h, ds);
    NetworkGrad grad = backward(net, tape, gh);
    add_penalty_grad(cfg.penalty, net, grad);
    auto blocks = param_blocks(net, grad);
    opt.step(blocks);
    ++epochs;
    last_total = total;
    if (report) report->loss_curve.push_back(total);
    if (have_prev && std::abs(total - prev) / (std::abs(prev) + 1e-12) < cfg.early_stop) break;
    prev = total;
    have_prev = true;
  }
  if (report) {
    report->n_j = ds.n_j();
    report->epochs_run = epochs;
    report->final_loss = last_total;
  }
  return net;
}

// Exact evaluation of the cumulative baseline hazard estimator at time t:
//   Lambda0(t) = sum_{X_l <= t} delta_l / r_l  -  int_0^t hbar_{J(u)}(u) du,
// with r_l the at-risk count at X_l and hbar_j(u) the mean interval-j risk over
// subjects still at risk at u. Between breakpoints (observed times and grid
// points) the integrand is constant and equals the mean over subjects with
// X_i > a: anyone leaving exactly at a segment's start is outside {X_i >= u}
// for every u inside it. Step integration with that set is exact.
// `whole_interval` switches to the variant that extends the integral across the
// full interval containing t; kept for diagnostics only.
inline double baseline_cumhaz_at(const std::vector<std::vector<double>>& risk_matrix,
                                 const std::vector<SurvivalRecord>& records,
                                 const TimeGrid& grid, double t,
                                 bool whole_interval = false) {
  const std::size_t n = records.size();
  if (risk_matrix.size() != n)
    throw std::invalid_argument("baseline_cumhaz_at: risk matrix row count mismatch");
  if (t < 0.0) throw std::invalid_argument("baseline_cumhaz_at: t must be >= 0");

  double jumps = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    if (records[l].delta == 1 && records[l].x <= t) {
      std::size_t r = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (records[i].x >= records[l].x) ++r;
      jumps += 1.0 / static_cast<double>(r);
    }
  }

  double upper = t;
  if (whole_interval) upper = grid.upper(grid.interval_index(t));
  std::vector<double> cuts{0.0, upper};
  for (const auto& r : records)
    if (r.x < upper) cuts.push_back(r.x);
  for (double g : grid.points)
    if (g < upper) cuts.push_back(g);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double compensator = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const std::size_t j = grid.interval_index(a);
    double sum_h = 0.0;
    std::size_t at_risk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (records[i].x > a) {
        sum_h += risk_matrix[i][j];
        ++at_risk;
      }
    }
    if (at_risk == 0) break;  // estimate truncates at the last observed time
    compensator += (b - a) * sum_h / static_cast<double>(at_risk);
  }
  return jumps - compensator;
}

// Step-function baseline sampled at every observed time and grid point. One
// sorted sweep: per-interval suffix sums give each risk-set mean in O(M).
inline StepFunction baseline_cumhaz(const std::vector<std::vector<double>>& risk_matrix,
                                    const std::vector<SurvivalRecord>& records,
                                    const TimeGrid& grid) {
  const std::size_t n = records.size();
  if (risk_matrix.size() != n)
    throw std::invalid_argument("baseline_cumhaz: risk matrix row count mismatch");
  const std::size_t m1 = grid.intervals();

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].x < records[b].x; });
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = records[order[i]].x;

  // suffix[j][i] = sum of interval-j risks over subjects with the i-th largest
  // times onward; dividing by n-i gives the risk-set mean on any open segment
  // whose start sits in [xs[i-1], xs[i]), i.e. the mean over subjects with
  // x strictly beyond the segment's start.
  std::vector<std::vector<double>> suffix(m1, std::vector<double>(n + 1, 0.0));
  for (std::size_t j = 0; j < m1; ++j)
    for (std::size_t i = n; i-- > 0;)
      suffix[j][i] = suffix[j][i + 1] + risk_matrix[order[i]][j];

  auto mean_after = [&](std::size_t j, double u) -> double {
    const std::size_t pos = static_cast<std::size_t>(
        std::upper_bound(xs.begin(), xs.end(), u) - xs.begin());
    const std::size_t at_risk = n - pos;
    if (at_risk == 0) return 0.0;
    return suffix[j][pos] / static_cast<double>(at_risk);
  };

  std::vector<double> knots = xs;
  for (double g : grid.points)
    if (g <= grid.tau) knots.push_back(g);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> values;
  values.reserve(knots.size());
  double acc = 0.0;
  double prev = 0.0;
  for (double k : knots) {
    if (k > prev && n - static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), prev) -
                                                 xs.begin()) > 0) {
      // accrue the compensator over (prev, k); J and the risk set are constant
      // between knots except where grid points fall inside, already knots here
      acc -= (k - prev) * mean_after(grid.interval_index(prev), prev);
    }
    // events exactly at k
    const auto lo = std::lower_bound(xs.begin(), xs.end(), k);
    const auto hi = std::upper_bound(xs.begin(), xs.end(), k);
    const std::size_t r = n - static_cast<std::size_t>(lo - xs.begin());
    for (auto it = lo; it != hi; ++it) {
      const std::size_t idx = order[static_cast<std::size_t>(it - xs.begin())];
      if (records[idx].delta == 1) acc += 1.0 / static_cast<double>(r);
    }
    values.push_back(acc);
    prev = k;
  }
  return StepFunction(std::move(knots), std::move(values));
}

// Sequential fit of all interval networks (Algorithm "train forward in time"):
// each network is trained on its working dataset, then evaluated on every
// subject so later intervals can consume the risks as extra features. Forward
// passes that build features run in eval mode; dropout only perturbs training.
inline DeepHazardModel fit(std::vector<SurvivalRecord> records, const TimeGrid& grid,
                           const TrainConfig& cfg) {
  grid.validate();
  cfg.validate();
  validate_records(records, grid);
  truncate_at_horizon(records, grid);
  const std::size_t n = records.size();
  const std::size_t m1 = grid.intervals();

  DeepHazardModel model;
  model.grid = grid;
  model.risk_matrix.assign(n, std::vector<double>{});
  Rng master(cfg.seed);

  std::vector<std::vector<double>> prior(n);
  for (std::size_t j = 0; j < m1; ++j) {
    WorkingDataset ds = build_working_dataset(records, grid, j, prior);
    Rng stream = master.substream(j);
    IntervalReport report;
    IntervalNetwork net = train_interval_network(ds, cfg, stream, &report);
    model.reports.push_back(std::move(report));

    Matrix all(n, records.front().covariates[j].size() + j);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& z = records[i].covariates[j];
      std::copy(z.begin(), z.end(), &all.data[i * all.cols]);
      std::copy(prior[i].begin(), prior[i].end(), &all.data[i * all.cols + z.size()]);
    }
    const std::vector<double> h = forward_eval(net, all);
    for (std::size_t i = 0; i < n; ++i) prior[i].push_back(h[i]);
    model.networks.push_back(std::move(net));
  }
  model.risk_matrix = std::move(prior);
  model.baseline = baseline_cumhaz(model.risk_matrix, records, grid);
  return model;
}

}  // namespace deephazard
