#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "deephazard/data.hpp"
#include "deephazard/rng.hpp"
#include "deephazard/simulate.hpp"
#include "oracles.hpp"

namespace dh = deephazard;

namespace {

dh::TimeGrid grid4() {
  dh::TimeGrid g;
  g.points = {0.0, 0.25, 0.5, 0.75};
  g.tau = 1.0;
  return g;
}

// Hazard so small the doubling bracket blows through the time cap.
dh::SimModelSpec negligible_hazard_spec() {
  dh::SimModelSpec s;
  s.name = "negligible";
  s.dim = 0;
  s.baseline = [](double) { return 1e-9; };
  s.excess = [](double, const std::vector<double>&) { return 0.0; };
  return s;
}

}  // namespace

TEST(CovariatePath, ScalesByRootTimeUntilThePlateau) {
  const std::vector<double> z0{2.0, -3.0};
  EXPECT_EQ(dh::covariate_path(z0, 0.0), (std::vector<double>{0.0, 0.0}));
  // sqrt(0.25) = 0.5 exactly
  EXPECT_EQ(dh::covariate_path(z0, 0.25), (std::vector<double>{1.0, -1.5}));

  const auto at_plateau = dh::covariate_path(z0, dh::kCovariatePlateau);
  EXPECT_NEAR(at_plateau[0], std::sqrt(0.6) * 2.0, 1e-15);
  // Frozen after the plateau, bitwise.
  EXPECT_EQ(dh::covariate_path(z0, 0.61), at_plateau);
  EXPECT_EQ(dh::covariate_path(z0, 900.0), at_plateau);
}

TEST(CovariatePath, RejectsNegativeTime) {
  EXPECT_THROW(dh::covariate_path({1.0}, -1e-9), std::invalid_argument);
}

TEST(CumulativeHazardTrue, ClosedFormsOnDegenerateModels) {
  const auto pure = dh::model_spec("pure-baseline");
  const auto constant = dh::model_spec("constant-hazard");
  const std::vector<double> z0{0.3};

  EXPECT_EQ(dh::cumulative_hazard_true(pure, z0, 0.0), 0.0);
  // Simpson integrates cubics exactly, so only roundoff remains against t^4.
  for (double t : {0.3, 0.7, 1.0, 2.0})
    EXPECT_NEAR(dh::cumulative_hazard_true(pure, z0, t), t * t * t * t, 1e-9);
  for (double t : {0.2, 1.0, 3.0})
    EXPECT_NEAR(dh::cumulative_hazard_true(constant, z0, t), t, 1e-12);

  EXPECT_THROW(dh::cumulative_hazard_true(pure, z0, -0.1), std::invalid_argument);
}

TEST(CumulativeHazardTrue, MatchesDenseRiemannSumAcrossModels) {
  for (const char* name : {"model1", "model2", "model3", "model4", "model5", "model6"}) {
    const auto spec = dh::model_spec(name);
    dh::Rng rng(314);
    const std::vector<double> z0 = spec.draw_z0(rng);
    for (double t : {0.4, 1.0}) {
      const double ref = oracle::cumhaz_riemann(spec, z0, t);
      const double got = dh::cumulative_hazard_true(spec, z0, t);
      EXPECT_NEAR(got, ref, 1e-6 * std::max(1.0, std::abs(ref))) << name << " t=" << t;
    }
  }
}

TEST(CumulativeHazardTrue, ReportsNegativeHazardDraws) {
  dh::SimModelSpec bad;
  bad.name = "bad";
  bad.dim = 0;
  bad.baseline = [](double) { return -1.0; };
  bad.excess = [](double, const std::vector<double>&) { return 0.0; };
  EXPECT_THROW(dh::cumulative_hazard_true(bad, {}, 0.5), std::runtime_error);
}

TEST(ModelSpecCatalog, NamesDimensionsAndBounds) {
  using bounds_t = std::vector<std::pair<double, double>>;
  const auto m1 = dh::model_spec("model1");
  EXPECT_EQ(m1.name, "model1");
  EXPECT_EQ(m1.dim, 3u);
  EXPECT_EQ(m1.z0_bounds, (bounds_t{{0.0, 10.0}, {0.0, 20.0}, {0.0, 30.0}}));

  for (const char* name : {"model2", "model3", "model4"}) {
    const auto m = dh::model_spec(name);
    EXPECT_EQ(m.dim, 3u);
    EXPECT_EQ(m.z0_bounds, (bounds_t{{0.0, 20.0}, {0.0, 20.0}, {0.0, 20.0}})) << name;
  }

  const auto m5 = dh::model_spec("model5");
  EXPECT_EQ(m5.dim, 20u);
  EXPECT_EQ(m5.z0_bounds[0], std::make_pair(5.0, 20.0));
  EXPECT_EQ(m5.z0_bounds[1], std::make_pair(0.0, 20.0));
  for (int k : {15, 16, 17}) EXPECT_EQ(m5.z0_bounds[k], std::make_pair(0.0, 1.0)) << k;
  for (int k : {18, 19}) EXPECT_EQ(m5.z0_bounds[k], std::make_pair(3.0, 4.0)) << k;

  const auto m6 = dh::model_spec("model6");
  EXPECT_EQ(m6.dim, 20u);
  EXPECT_EQ(m6.z0_bounds[3], std::make_pair(3.0, 4.0));
  EXPECT_EQ(m6.z0_bounds[4], std::make_pair(0.0, 20.0));

  EXPECT_EQ(dh::model_spec("pure-baseline").dim, 1u);
  EXPECT_EQ(dh::model_spec("constant-hazard").baseline(123.0), 1.0);
  EXPECT_THROW(dh::model_spec("model7"), std::invalid_argument);

  // Draws respect the per-coordinate bounds.
  dh::Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const auto z0 = m5.draw_z0(rng);
    ASSERT_EQ(z0.size(), 20u);
    for (std::size_t k = 0; k < 20; ++k) {
      EXPECT_GE(z0[k], m5.z0_bounds[k].first);
      EXPECT_LT(z0[k], m5.z0_bounds[k].second);
    }
  }
}

TEST(SampleEventTime, InvertsClosedFormSurvivalCurves) {
  const auto pure = dh::model_spec("pure-baseline");
  const auto constant = dh::model_spec("constant-hazard");
  const std::vector<double> z0{0.5};

  // exp(-t^4) = omega  =>  t = (-log omega)^{1/4}
  EXPECT_NEAR(dh::sample_event_time(pure, z0, 0.5), std::pow(std::log(2.0), 0.25), 1e-9);
  // exp(-t) = omega  =>  t = -log omega
  EXPECT_NEAR(dh::sample_event_time(constant, z0, std::exp(-2.0)), 2.0, 1e-9);
  EXPECT_NEAR(dh::sample_event_time(constant, z0, 0.9), -std::log(0.9), 1e-9);
}

TEST(SampleEventTime, SolvesTheTransformOnRandomDraws) {
  const auto spec = dh::model_spec("model2");
  dh::Rng rng(2718);
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<double> z0 = spec.draw_z0(rng);
    const double omega = rng.uniform_open();
    bool beyond = true;
    const double t = dh::sample_event_time(spec, z0, omega, &beyond);
    EXPECT_FALSE(beyond);
    ASSERT_GT(t, 0.0);
    ASSERT_LT(t, dh::kHorizonMax);
    // Lambda(T) should equal -log(omega) up to the bisection's time
    // resolution scaled by the local hazard slope.
    const double target = -std::log(omega);
    const double slope = spec.total_hazard(t, z0);
    EXPECT_NEAR(dh::cumulative_hazard_true(spec, z0, t), target, (slope + 1.0) * 1e-9);
  }
}

TEST(SampleEventTime, FlagsDrawsBeyondTheBracketCap) {
  const auto tiny = negligible_hazard_spec();
  bool beyond = false;
  const double t = dh::sample_event_time(tiny, {}, 0.5, &beyond);
  EXPECT_EQ(t, dh::kHorizonMax);
  EXPECT_TRUE(beyond);
  // Without the flag pointer the cap is still returned.
  EXPECT_EQ(dh::sample_event_time(tiny, {}, 0.5), dh::kHorizonMax);
}

TEST(SampleEventTime, RejectsOmegaOutsideTheOpenInterval) {
  const auto spec = dh::model_spec("constant-hazard");
  for (double omega : {0.0, 1.0, -0.1, 1.1})
    EXPECT_THROW(dh::sample_event_time(spec, {0.5}, omega), std::invalid_argument) << omega;
}

TEST(CalibrateCensoring, TargetZeroDisablesCensoringWithoutPilotDraws) {
  dh::Rng rng(1);
  const double c = dh::calibrate_censoring(dh::model_spec("constant-hazard"), 0.0, 0, rng);
  EXPECT_TRUE(std::isinf(c));
  EXPECT_GT(c, 0.0);
}

TEST(CalibrateCensoring, RejectsBadArguments) {
  dh::Rng rng(1);
  const auto spec = dh::model_spec("constant-hazard");
  EXPECT_THROW(dh::calibrate_censoring(spec, -0.1, 100, rng), std::invalid_argument);
  EXPECT_THROW(dh::calibrate_censoring(spec, 1.0, 100, rng), std::invalid_argument);
  EXPECT_THROW(dh::calibrate_censoring(spec, 1.5, 100, rng), std::invalid_argument);
  EXPECT_THROW(dh::calibrate_censoring(spec, 0.3, 0, rng), std::invalid_argument);
}

TEST(CalibrateCensoring, RecoversTheClosedFormScaleForExponentialLifetimes) {
  // For T ~ Exp(1) and C ~ U(0,c), the censored fraction is (1 - e^{-c})/c.
  // Target 0.2 solves to c ~ 4.965; a 4000-subject pilot lands nearby.
  dh::Rng rng(77);
  const double c = dh::calibrate_censoring(dh::model_spec("constant-hazard"), 0.2, 4000, rng);
  EXPECT_NEAR(c, 4.965, 0.6);
  EXPECT_NEAR((1.0 - std::exp(-c)) / c, 0.2, 0.02);
}

TEST(CalibrateCensoring, DependsOnlyOnTheStreamSeed) {
  const auto spec = dh::model_spec("constant-hazard");
  dh::Rng a(123);
  const double ca = dh::calibrate_censoring(spec, 0.15, 500, a);
  dh::Rng b(123);
  for (int k = 0; k < 40; ++k) b.uniform();  // pilot substreams ignore parent draws
  const double cb = dh::calibrate_censoring(spec, 0.15, 500, b);
  EXPECT_EQ(ca, cb);

  dh::Rng c(124);
  EXPECT_NE(ca, dh::calibrate_censoring(spec, 0.15, 500, c));
}

TEST(TrueSurvivalCacheTest, TracksTheExactCurveOnClosedFormModels) {
  const auto pure = dh::model_spec("pure-baseline");
  const std::vector<std::vector<double>> z0s{{0.5}, {0.1}};
  const auto cache = dh::make_true_survival_cache(pure, z0s, 1.0);
  ASSERT_EQ(cache.cumhaz.size(), 2u);
  for (double t : {1e-8, 0.001, 0.01, 0.1, 0.25, 0.6, 0.77, 1.0})
    EXPECT_NEAR(cache.survival(0, t), std::exp(-t * t * t * t), 2e-4) << t;
  EXPECT_EQ(cache.survival(1, 0.0), 1.0);
  EXPECT_EQ(cache.survival(1, -0.5), 1.0);
  // Held flat beyond the tabulated range.
  EXPECT_EQ(cache.survival(0, 50.0), cache.survival(0, 1.0));
}

TEST(TrueSurvivalCacheTest, AgreesWithTheAdaptiveIntegratorPerSubject) {
  const auto spec = dh::model_spec("model4");
  const auto out = dh::generate_dataset(spec, 5, grid4(), 0.0, 11);
  const auto cache = dh::make_true_survival_cache(spec, out.z0, 1.0);
  for (std::size_t i = 0; i < out.z0.size(); ++i) {
    for (double t : {0.1, 0.5, 0.9}) {
      const double exact = dh::cumulative_hazard_true(spec, out.z0[i], t);
      const double tabulated = -std::log(cache.survival(i, t));
      EXPECT_NEAR(tabulated, exact, 1e-3 * std::max(1.0, exact)) << "i=" << i << " t=" << t;
      // SimOutput's own evaluator is the same integral in exp scale.
      EXPECT_NEAR(out.true_survival(i, t), std::exp(-exact), 1e-12);
    }
  }
}

TEST(TrueSurvivalCacheTest, ValidatesArguments) {
  const auto pure = dh::model_spec("pure-baseline");
  EXPECT_THROW(dh::make_true_survival_cache(pure, {{0.5}}, 0.0), std::invalid_argument);
  EXPECT_THROW(dh::make_true_survival_cache(pure, {{0.5}}, -1.0), std::invalid_argument);
  EXPECT_THROW(dh::make_true_survival_cache(pure, {{0.5}}, 1.0, 8), std::invalid_argument);
}

TEST(GenerateDataset, ShapesIdsAndCovariateLayout) {
  const auto spec = dh::model_spec("model1");
  const dh::TimeGrid grid = grid4();
  const auto out = dh::generate_dataset(spec, 4, grid, 0.0, 3);

  ASSERT_EQ(out.records.size(), 4u);
  ASSERT_EQ(out.z0.size(), 4u);
  EXPECT_EQ(out.seed, 3u);
  EXPECT_TRUE(std::isinf(out.censoring_scale));
  EXPECT_EQ(out.achieved_censoring, 0.0);

  for (std::size_t i = 0; i < 4; ++i) {
    const auto& rec = out.records[i];
    EXPECT_EQ(rec.id, "s" + std::to_string(i + 1));
    EXPECT_EQ(rec.delta, 1) << "no censoring requested";
    EXPECT_GT(rec.x, 0.0);
    ASSERT_EQ(rec.covariates.size(), grid.intervals());
    for (std::size_t j = 0; j < grid.points.size(); ++j)
      EXPECT_EQ(rec.covariates[j], dh::covariate_path(out.z0[i], grid.points[j]));
  }
}

TEST(GenerateDataset, ReplaysThePerSubjectStreamProtocol) {
  const auto spec = dh::model_spec("model2");
  const std::uint64_t seed = 5;
  const auto out = dh::generate_dataset(spec, 3, grid4(), 0.0, seed);

  dh::Rng master(seed);
  for (std::size_t i = 0; i < 3; ++i) {
    dh::Rng sub = master.substream(i);
    const std::vector<double> z0 = spec.draw_z0(sub);
    const double omega = sub.uniform_open();
    EXPECT_EQ(out.z0[i], z0);
    EXPECT_EQ(out.records[i].x, dh::sample_event_time(spec, z0, omega));
  }
}

TEST(GenerateDataset, DeterministicWithStablePrefixes) {
  const auto spec = dh::model_spec("model1");
  const auto a = dh::generate_dataset(spec, 6, grid4(), 0.0, 9);
  const auto b = dh::generate_dataset(spec, 6, grid4(), 0.0, 9);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.records[i].x, b.records[i].x);
    EXPECT_EQ(a.records[i].delta, b.records[i].delta);
    EXPECT_EQ(a.z0[i], b.z0[i]);
  }

  // Without censoring, growing the cohort only appends subjects.
  const auto c = dh::generate_dataset(spec, 9, grid4(), 0.0, 9);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.records[i].x, c.records[i].x);
    EXPECT_EQ(a.records[i].id, c.records[i].id);
    EXPECT_EQ(a.z0[i], c.z0[i]);
  }

  const auto d = dh::generate_dataset(spec, 6, grid4(), 0.0, 10);
  bool any_diff = false;
  for (std::size_t i = 0; i < 6; ++i) any_diff = any_diff || a.records[i].x != d.records[i].x;
  EXPECT_TRUE(any_diff);
}

TEST(GenerateDataset, HitsTheRequestedCensoringLevel) {
  const auto spec = dh::model_spec("model4");
  const auto out = dh::generate_dataset(spec, 1500, grid4(), 0.2, 21, 1500);

  EXPECT_TRUE(std::isfinite(out.censoring_scale));
  EXPECT_GT(out.censoring_scale, 0.0);
  EXPECT_NEAR(out.achieved_censoring, 0.2, 0.05);

  std::size_t censored = 0;
  for (const auto& rec : out.records) {
    ASSERT_LE(rec.x, out.censoring_scale);
    if (rec.delta == 0) ++censored;
  }
  EXPECT_EQ(out.achieved_censoring, static_cast<double>(censored) / 1500.0);
}

TEST(GenerateDataset, RejectsBadArguments) {
  const auto spec = dh::model_spec("model1");
  EXPECT_THROW(dh::generate_dataset(spec, 0, grid4(), 0.0, 1), std::invalid_argument);
  dh::TimeGrid bad;
  bad.points = {};
  bad.tau = 1.0;
  EXPECT_THROW(dh::generate_dataset(spec, 3, bad, 0.0, 1), std::invalid_argument);
}
