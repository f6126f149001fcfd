#include "deephazard/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "deephazard/data.hpp"
#include "deephazard/loss.hpp"
#include "deephazard/metrics.hpp"
#include "deephazard/rng.hpp"
#include "oracles.hpp"

namespace dh = deephazard;

namespace {

dh::SurvivalRecord rec(const std::string& id, double x, int delta,
                       std::vector<std::vector<double>> covs) {
  dh::SurvivalRecord r;
  r.id = id;
  r.x = x;
  r.delta = delta;
  r.covariates = std::move(covs);
  return r;
}

dh::ActivationSpec act(dh::Activation k, double alpha = 1.0) {
  dh::ActivationSpec a;
  a.kind = k;
  a.alpha = alpha;
  return a;
}

}  // namespace

TEST(TrainConfig, BroadcastAndValidation) {
  dh::TrainConfig cfg;
  cfg.widths = {8, 4, 2};
  EXPECT_EQ(cfg.layer_activations().size(), 3u);  // one spec fans out
  EXPECT_EQ(cfg.layer_dropout().size(), 3u);
  cfg.dropout = {};
  EXPECT_EQ(cfg.layer_dropout(), std::vector<double>(3, 0.0));
  cfg.dropout = {0.1, 0.2};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.dropout = {0.1, 0.2, 0.3};
  EXPECT_NO_THROW(cfg.validate());

  cfg = dh::TrainConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = dh::TrainConfig{};
  cfg.early_stop = -1e-9;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = dh::TrainConfig{};
  cfg.penalty.lambda = -0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = dh::TrainConfig{};
  cfg.penalty.p = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  // a linear model: no hidden layers, broadcast collapses to nothing
  cfg = dh::TrainConfig{};
  cfg.widths = {};
  EXPECT_TRUE(cfg.layer_activations().empty());
  EXPECT_NO_THROW(cfg.validate());
}

TEST(FeaturesOf, LaysOutAugmentedCovariates) {
  dh::TimeGrid grid({0.0, 0.25, 0.5, 0.75}, 1.0);
  std::vector<dh::SurvivalRecord> recs{
      rec("a", 0.3, 1, {{1.0}, {2.0}, {3.0}, {4.0}}),
      rec("b", 0.9, 0, {{5.0}, {6.0}, {7.0}, {8.0}})};
  std::vector<std::vector<double>> prior{{0.25}, {0.75}};
  const auto ds = dh::build_working_dataset(recs, grid, 1, prior);
  const auto feats = dh::features_of(ds);
  ASSERT_EQ(feats.rows, 2u);
  ASSERT_EQ(feats.cols, 2u);  // one covariate plus one prior risk
  EXPECT_EQ(feats.at(0, 0), 2.0);
  EXPECT_EQ(feats.at(0, 1), 0.25);
  EXPECT_EQ(feats.at(1, 0), 6.0);
  EXPECT_EQ(feats.at(1, 1), 0.75);
}

TEST(TrainInterval, NeedsTwoRecords) {
  const auto ds = oracle::make_ds(0.0, 1.0, 5, {0.4}, {1});
  dh::TrainConfig cfg;
  dh::Rng rng(1);
  EXPECT_THROW(dh::train_interval_network(ds, cfg, rng), std::invalid_argument);
}

TEST(TrainInterval, DeterministicGivenStream) {
  dh::Rng data_rng(2);
  auto ds = oracle::random_ds(data_rng, 12, 12, 0.0, 1.0);
  for (auto& w : ds.records)
    w.z_tilde = {data_rng.uniform(-1.0, 1.0), data_rng.uniform(-1.0, 1.0)};
  dh::TrainConfig cfg;
  cfg.widths = {5};
  cfg.activations = {act(dh::Activation::Tanh)};
  cfg.dropout = {0.2};  // exercises the mask stream too
  cfg.max_epochs = 25;
  cfg.early_stop = 0.0;

  dh::Rng r1(77), r2(77);
  dh::IntervalReport rep1, rep2;
  const auto n1 = dh::train_interval_network(ds, cfg, r1, &rep1);
  const auto n2 = dh::train_interval_network(ds, cfg, r2, &rep2);
  ASSERT_EQ(n1.hidden[0].weights.data, n2.hidden[0].weights.data);
  ASSERT_EQ(n1.out_weights, n2.out_weights);
  ASSERT_EQ(rep1.loss_curve, rep2.loss_curve);
}

TEST(TrainInterval, LossCurveNonincreasingUnderSmallSgdSteps) {
  dh::Rng data_rng(3);
  auto ds = oracle::random_ds(data_rng, 15, 15, 0.0, 1.0);
  for (auto& w : ds.records)
    w.z_tilde = {data_rng.uniform(-1.0, 1.0), data_rng.uniform(-1.0, 1.0)};
  dh::TrainConfig cfg;
  cfg.widths = {6};
  cfg.activations = {act(dh::Activation::Tanh)};
  cfg.optimizer = dh::OptimizerKind::Sgd;
  cfg.learning_rate = 1e-4;
  cfg.max_epochs = 40;
  cfg.early_stop = 0.0;
  dh::Rng rng(4);
  dh::IntervalReport rep;
  dh::train_interval_network(ds, cfg, rng, &rep);
  ASSERT_EQ(rep.loss_curve.size(), 40u);
  for (std::size_t e = 1; e < rep.loss_curve.size(); ++e)
    ASSERT_LE(rep.loss_curve[e], rep.loss_curve[e - 1] + 1e-12) << "epoch " << e;
  EXPECT_EQ(rep.final_loss, rep.loss_curve.back());
  EXPECT_EQ(rep.epochs_run, 40u);
  EXPECT_EQ(rep.n_j, 15u);
}

TEST(TrainInterval, CensoredConstantCovariatesStillImprove) {
  // All-censored data with a flat covariate: the loss is minimized by any
  // constant risk, and training moves toward that floor.
  const auto ds = [&] {
    auto d = oracle::make_ds(0.0, 1.0, 6, {0.2, 0.4, 0.6, 0.8, 1.0, 1.0}, {0, 0, 0, 0, 0, 0});
    for (auto& w : d.records) w.z_tilde = {1.0};
    return d;
  }();
  dh::TrainConfig cfg;
  cfg.widths = {3};
  cfg.activations = {act(dh::Activation::Tanh)};
  cfg.max_epochs = 60;
  cfg.early_stop = 0.0;
  dh::Rng rng(5);
  dh::IntervalReport rep;
  dh::train_interval_network(ds, cfg, rng, &rep);
  EXPECT_LE(rep.final_loss, rep.loss_curve.front() + 1e-12);
  EXPECT_GE(rep.final_loss, 0.0 - 1e-12);  // the floor for event-free data
}

TEST(TrainInterval, EarlyStoppingSemantics) {
  dh::Rng data_rng(6);
  auto ds = oracle::random_ds(data_rng, 10, 10, 0.0, 1.0);
  for (auto& w : ds.records)
    w.z_tilde = {data_rng.uniform(-1.0, 1.0), data_rng.uniform(-1.0, 1.0)};
  dh::TrainConfig cfg;
  cfg.widths = {4};
  cfg.activations = {act(dh::Activation::Tanh)};
  cfg.max_epochs = 30;

  cfg.early_stop = 0.0;  // strict '<' means a zero threshold never fires
  dh::Rng r1(7);
  dh::IntervalReport rep;
  dh::train_interval_network(ds, cfg, r1, &rep);
  EXPECT_EQ(rep.epochs_run, 30u);

  cfg.early_stop = 1e9;  // fires at the first comparison
  dh::Rng r2(7);
  dh::train_interval_network(ds, cfg, r2, &rep);
  EXPECT_EQ(rep.epochs_run, 2u);
}

TEST(TrainInterval, DivergenceIsReported) {
  const auto ds = oracle::make_ds(0.0, 1.0, 2, {0.5, 1.0}, {1, 0});
  auto with_z = ds;
  with_z.records[0].z_tilde = {1.0};
  with_z.records[1].z_tilde = {0.0};
  dh::TrainConfig cfg;  // linear model
  cfg.optimizer = dh::OptimizerKind::Sgd;
  cfg.learning_rate = 1e6;
  cfg.max_epochs = 500;
  cfg.early_stop = 0.0;
  dh::Rng rng(8);
  EXPECT_THROW(dh::train_interval_network(with_z, cfg, rng), std::runtime_error);
}

TEST(TrainInterval, TwoSubjectMinimizerMatchesGridSearch) {
  // One interval [0, 1), subject A (x=0.5, event, z=1), subject B (censored at
  // the boundary, z=0). With a linear risk w*z + b the loss depends only on
  // w: L = w^2/16 - w/4, minimized at w = 2. Plain SGD contracts toward it;
  // the independent check is a grid search over the loss itself.
  auto ds = oracle::make_ds(0.0, 1.0, 2, {0.5, 1.0}, {1, 0});
  ds.records[0].z_tilde = {1.0};
  ds.records[1].z_tilde = {0.0};

  dh::TrainConfig cfg;
  cfg.widths = {};
  cfg.optimizer = dh::OptimizerKind::Sgd;
  cfg.learning_rate = 1.0;
  cfg.max_epochs = 3000;
  cfg.early_stop = 0.0;
  dh::Rng rng(9);
  const auto net = dh::train_interval_network(ds, cfg, rng);
  const double w = net.out_weights[0];

  const double w_grid = oracle::grid_search_min(
      [&](double v) { return dh::interval_loss({v, 0.0}, ds); }, -10.0, 10.0);
  EXPECT_NEAR(w_grid, 2.0, 1e-4);
  EXPECT_NEAR(w, w_grid, 1e-3);
}

TEST(TrainInterval, GradientPipelineMatchesFiniteDifference) {
  // The exact gradient the trainer steps on (backward through the taped
  // forward, chained with the loss gradient, plus the penalty) against central
  // differences of the scalar objective.
  dh::Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n_j = 3 + static_cast<std::size_t>(rng.uniform() * 4);
    auto ds = oracle::random_ds(rng, n_j, n_j + 2, 0.0, 1.0);
    for (auto& w : ds.records) {
      w.z_tilde = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    }
    dh::PenaltySpec pen;
    pen.lambda = trial % 2 == 0 ? 0.0 : 0.01;
    auto net = dh::make_network(2, {3}, {act(dh::Activation::Tanh)}, {0.0}, rng);
    const auto feats = dh::features_of(ds);

    const auto objective = [&]() {
      return dh::interval_loss(dh::forward_eval(net, feats), ds) + dh::penalty_value(pen, net);
    };

    dh::ForwardTape tape;
    const auto h = dh::forward(net, feats, dh::ForwardMode::Eval, nullptr, &tape);
    auto grad = dh::backward(net, tape, dh::interval_loss_grad(h, ds));
    dh::add_penalty_grad(pen, net, grad);
    const auto analytic = oracle::flatten_grad(grad);

    const auto ptrs = oracle::param_pointers(net);
    std::vector<double> fd(ptrs.size());
    for (std::size_t k = 0; k < ptrs.size(); ++k)
      fd[k] = oracle::central_fd(objective, ptrs[k], 1e-5);
    ASSERT_LT(oracle::grad_rel_err(analytic, fd), 1e-6) << "trial " << trial;
  }
}

// ---------------------------------------------------------------------------
// Baseline hazard

TEST(Baseline, ZeroRisksReduceToNelsonAalen) {
  // Hand case: three events among three subjects gives jumps 1/3, 1/2, 1.
  dh::TimeGrid grid({0.0}, 1.0);
  std::vector<dh::SurvivalRecord> recs{rec("a", 0.2, 1, {{0.0}}), rec("b", 0.5, 1, {{0.0}}),
                                       rec("c", 0.8, 1, {{0.0}})};
  const std::vector<std::vector<double>> zero(3, std::vector<double>(1, 0.0));
  EXPECT_NEAR(dh::baseline_cumhaz_at(zero, recs, grid, 0.2), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(dh::baseline_cumhaz_at(zero, recs, grid, 0.5), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(dh::baseline_cumhaz_at(zero, recs, grid, 0.8), 11.0 / 6.0, 1e-15);
  EXPECT_NEAR(dh::baseline_cumhaz_at(zero, recs, grid, 0.35), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(dh::baseline_cumhaz_at(zero, recs, grid, 0.1), 0.0);
  EXPECT_EQ(dh::baseline_cumhaz_at(zero, recs, grid, 0.0), 0.0);

  // and with censorings mixed in, it tracks the general estimator
  dh::Rng rng(11);
  auto mixed = oracle::random_records(rng, 25, grid, 1, 0.05, 0.99);
  const std::vector<std::vector<double>> zeros(25, std::vector<double>(1, 0.0));
  std::vector<double> times;
  std::vector<int> deltas;
  for (const auto& r : mixed) {
    times.push_back(r.x);
    deltas.push_back(r.delta);
  }
  const auto na = dh::nelson_aalen(times, deltas);
  for (double t : {0.1, 0.3, 0.55, 0.8, 0.95})
    EXPECT_NEAR(dh::baseline_cumhaz_at(zeros, mixed, grid, t), na.value_at(t), 1e-12);
}

TEST(Baseline, NoEventsZeroRisksIsIdenticallyZero) {
  dh::TimeGrid grid({0.0, 0.5}, 1.0);
  std::vector<dh::SurvivalRecord> recs{rec("a", 0.4, 0, {{0.0}, {0.0}}),
                                       rec("b", 0.9, 0, {{0.0}, {0.0}})};
  const std::vector<std::vector<double>> zero(2, std::vector<double>(2, 0.0));
  for (double t : {0.0, 0.2, 0.4, 0.6, 0.9})
    EXPECT_EQ(dh::baseline_cumhaz_at(zero, recs, grid, t), 0.0);
}

TEST(Baseline, CompensatorHandValueAndWholeIntervalVariant) {
  // Unit risks, no events: the estimate is minus the elapsed time; the
  // whole-interval variant integrates to the interval's right edge regardless.
  dh::TimeGrid grid({0.0}, 1.0);
  std::vector<dh::SurvivalRecord> recs{rec("a", 1.5, 0, {{0.0}}), rec("b", 1.8, 0, {{0.0}})};
  const std::vector<std::vector<double>> ones(2, std::vector<double>(1, 1.0));
  EXPECT_NEAR(dh::baseline_cumhaz_at(ones, recs, grid, 0.4), -0.4, 1e-15);
  EXPECT_NEAR(dh::baseline_cumhaz_at(ones, recs, grid, 0.4, true), -1.0, 1e-15);
  EXPECT_THROW(dh::baseline_cumhaz_at(ones, recs, grid, -0.1), std::invalid_argument);
}

TEST(Baseline, TruncatesWhenRiskSetEmpties) {
  dh::TimeGrid grid({0.0, 0.5}, 1.0);
  std::vector<dh::SurvivalRecord> recs{rec("a", 0.2, 1, {{0.0}, {0.0}}),
                                       rec("b", 0.4, 1, {{0.0}, {0.0}})};
  const std::vector<std::vector<double>> ones(2, std::vector<double>(2, 1.0));
  // beyond the last observed time the estimate freezes
  const double at_08 = dh::baseline_cumhaz_at(ones, recs, grid, 0.8);
  const double at_50 = dh::baseline_cumhaz_at(ones, recs, grid, 5.0);
  EXPECT_EQ(at_08, at_50);
  // jumps 1/2 + 1, compensator only up to 0.4 where the last subject exits
  EXPECT_NEAR(at_08, 1.5 - 0.4, 1e-15);
}

TEST(Baseline, IntervalwiseSumMatchesGlobal) {
  // The global estimator equals the sum of per-interval estimators built from
  // the working datasets (with the first interval's compensator run from 0).
  dh::Rng rng(12);
  dh::TimeGrid grid({0.05, 0.3, 0.6}, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto recs = oracle::random_records(rng, 20, grid, 1, 0.06, 1.2);
    recs.push_back(rec("guard", 1.3, 0, {{0.0}, {0.0}, {0.0}}));
    dh::truncate_at_horizon(recs, grid);
    std::vector<std::vector<double>> rm(recs.size(), std::vector<double>(3));
    for (auto& row : rm)
      for (auto& v : row) v = rng.uniform(-0.5, 1.5);
    for (double t : {0.1, 0.3, 0.45, 0.6, 0.77, 1.0}) {
      const double global = dh::baseline_cumhaz_at(rm, recs, grid, t);
      const double split = oracle::baseline_intervalwise(rm, recs, grid, t);
      ASSERT_NEAR(global, split, 1e-10) << "trial " << trial << " t=" << t;
    }
  }
}

TEST(Baseline, SampledStepFunctionAgreesAtKnots) {
  dh::Rng rng(13);
  dh::TimeGrid grid({0.0, 0.25, 0.5, 0.75}, 1.0);
  auto recs = oracle::random_records(rng, 30, grid, 1, 0.02, 1.2);
  dh::truncate_at_horizon(recs, grid);
  std::vector<std::vector<double>> rm(recs.size(), std::vector<double>(4));
  for (auto& row : rm)
    for (auto& v : row) v = rng.uniform(-0.5, 1.5);
  const auto sf = dh::baseline_cumhaz(rm, recs, grid);
  ASSERT_FALSE(sf.knots.empty());
  for (std::size_t k = 0; k < sf.knots.size(); ++k)
    ASSERT_NEAR(sf.values[k], dh::baseline_cumhaz_at(rm, recs, grid, sf.knots[k]), 1e-10)
        << "knot " << sf.knots[k];
}

// ---------------------------------------------------------------------------
// Sequential fit

namespace {

std::vector<dh::SurvivalRecord> small_cohort(dh::Rng& rng, std::size_t n,
                                             const dh::TimeGrid& grid) {
  auto recs = oracle::random_records(rng, n, grid, 2, 0.05, 1.3);
  recs.push_back(rec("g1", 1.4, 0, std::vector<std::vector<double>>(grid.intervals(),
                                                                    {0.3, -0.2})));
  recs.push_back(rec("g2", 1.5, 0, std::vector<std::vector<double>>(grid.intervals(),
                                                                    {-0.1, 0.4})));
  return recs;
}

dh::TrainConfig quick_config() {
  dh::TrainConfig cfg;
  cfg.widths = {4};
  cfg.activations = {act(dh::Activation::Tanh)};
  cfg.max_epochs = 30;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST(Fit, ShapesReportsAndBaselineConsistency) {
  dh::Rng rng(14);
  const dh::TimeGrid grid({0.0, 0.3, 0.6}, 1.0);
  const auto recs = small_cohort(rng, 30, grid);
  const auto cfg = quick_config();
  const auto model = dh::fit(recs, grid, cfg);

  ASSERT_EQ(model.networks.size(), 3u);
  ASSERT_EQ(model.risk_matrix.size(), recs.size());
  for (const auto& row : model.risk_matrix) ASSERT_EQ(row.size(), 3u);
  ASSERT_EQ(model.reports.size(), 3u);
  for (const auto& rep : model.reports) {
    EXPECT_GE(rep.n_j, 2u);
    EXPECT_GE(rep.epochs_run, 1u);
    EXPECT_LE(rep.epochs_run, cfg.max_epochs);
    EXPECT_EQ(rep.loss_curve.size(), rep.epochs_run);
    EXPECT_EQ(rep.final_loss, rep.loss_curve.back());
  }

  // the stored baseline is the sampled version of the exact evaluator
  auto truncated = recs;
  dh::truncate_at_horizon(truncated, grid);
  for (std::size_t k = 0; k < model.baseline.knots.size(); ++k)
    ASSERT_NEAR(model.baseline.values[k],
                dh::baseline_cumhaz_at(model.risk_matrix, truncated, grid,
                                       model.baseline.knots[k]),
                1e-10);
}

TEST(Fit, DeterministicAcrossRuns) {
  dh::Rng rng(15);
  const dh::TimeGrid grid({0.0, 0.3, 0.6}, 1.0);
  const auto recs = small_cohort(rng, 25, grid);
  auto cfg = quick_config();
  cfg.dropout = {0.2};
  const auto m1 = dh::fit(recs, grid, cfg);
  const auto m2 = dh::fit(recs, grid, cfg);
  ASSERT_EQ(m1.risk_matrix, m2.risk_matrix);
  ASSERT_EQ(m1.baseline.knots, m2.baseline.knots);
  ASSERT_EQ(m1.baseline.values, m2.baseline.values);

  auto cfg2 = cfg;
  cfg2.seed = 6;
  const auto m3 = dh::fit(recs, grid, cfg2);
  EXPECT_NE(m1.risk_matrix, m3.risk_matrix);
}

TEST(Fit, LaterCovariatesCannotTouchEarlierRisks) {
  // The fit is sequential: interval j sees covariates at t_0..t_j only, so
  // editing the last interval's covariates leaves earlier risk columns
  // bit-identical.
  dh::Rng rng(16);
  const dh::TimeGrid grid({0.0, 0.3, 0.6}, 1.0);
  const auto recs = small_cohort(rng, 25, grid);
  auto edited = recs;
  for (auto& r : edited) r.covariates[2] = {9.0, -9.0};
  const auto cfg = quick_config();
  const auto m1 = dh::fit(recs, grid, cfg);
  const auto m2 = dh::fit(edited, grid, cfg);
  bool last_column_changed = false;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    ASSERT_EQ(m1.risk_matrix[i][0], m2.risk_matrix[i][0]);
    ASSERT_EQ(m1.risk_matrix[i][1], m2.risk_matrix[i][1]);
    if (m1.risk_matrix[i][2] != m2.risk_matrix[i][2]) last_column_changed = true;
  }
  EXPECT_TRUE(last_column_changed);
}

TEST(Fit, ValidatesInput) {
  const dh::TimeGrid grid({0.0, 0.3}, 1.0);
  dh::TrainConfig cfg;
  EXPECT_THROW(dh::fit({}, grid, cfg), std::invalid_argument);
  std::vector<dh::SurvivalRecord> recs{rec("a", 0.5, 1, {{1.0}})};  // missing one interval
  EXPECT_THROW(dh::fit(recs, grid, cfg), std::invalid_argument);
}
