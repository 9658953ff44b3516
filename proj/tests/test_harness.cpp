#include "conelrt/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelrt;

namespace {

ExperimentConfig small_factor(int threads) {
  ExperimentConfig cfg = fig3_config(Eigen::Vector4d(1, 1, 1, 1), 300, 5);
  cfg.n = 200;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST(Harness, WorkerCountDoesNotChangeResults) {
  const ExperimentResult a = run_experiment(small_factor(1));
  for (int threads : {4, 8}) {
    const ExperimentResult b = run_experiment(small_factor(threads));
    EXPECT_TRUE(a.lambda == b.lambda);
    EXPECT_TRUE(a.pvalue == b.pvalue);
  }
  for (std::size_t r : {0u, 17u, 299u}) EXPECT_EQ(replicate_statistic(small_factor(1), r), a.lambda[r]);
}

TEST(Harness, ValidationRejectsBadConfigs) {
  ExperimentConfig cfg = small_factor(1);
  cfg.reps = 0;
  EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  cfg = small_factor(1);
  cfg.n = 0;
  EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  cfg = small_factor(1);
  std::get<FactorExperiment>(cfg.model).submodel_k = 9;
  EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  cfg = small_factor(1);
  cfg.reference = "nope";
  EXPECT_THROW(validate_config(cfg), std::invalid_argument);
  ExperimentConfig fb;
  fb.model = FeedbackExperiment{};
  fb.bartlett = true;
  EXPECT_THROW(validate_config(fb), std::invalid_argument);
}

TEST(Harness, EmpiricalLevel) {
  const LevelEstimate none = empirical_level({0.1, 0.2, 0.3}, 1.0);
  EXPECT_EQ(none.rate, 0.0);
  EXPECT_EQ(none.stderr_, 0.0);
  const LevelEstimate half = empirical_level({0.5, 1.5, 2.5, 1.0, std::nan("")}, 1.0);
  EXPECT_DOUBLE_EQ(half.rate, 0.5);
  EXPECT_DOUBLE_EQ(half.stderr_, std::sqrt(0.25 / 4.0));
}

TEST(Harness, CriticalValues) {
  const CriticalValue c2 = estimate_critical(ChiSq{2}, 0.95, 200000, 1);
  EXPECT_NEAR(c2.value, -2.0 * std::log(0.05), 0.05);
  EXPECT_LE(c2.lower, c2.value);
  EXPECT_GE(c2.upper, c2.value);
  EXPECT_EQ(estimate_critical(ChiSq{0}, 0.95, 10000, 1).value, 0.0);
  const double a = estimate_critical(MaxEig{4}, 0.95, 200000, 2).value;
  const double b = estimate_critical(MaxEig{4}, 0.95, 200000, 3).value;
  EXPECT_NEAR(a, b, 0.05);
  EXPECT_THROW(estimate_critical(ChiSq{1}, 0.95, 100, 1), std::invalid_argument);
}

TEST(Harness, PValues) {
  const PValueFn closed(ChiSq{2}, 1000, 1, 1);
  EXPECT_FALSE(closed.sample().has_value());
  EXPECT_NEAR(closed(-2.0 * std::log(0.05)), 0.05, 1e-12);
  const PValueFn sampled(MaxEig{4}, 20000, 1, 1);
  ASSERT_TRUE(sampled.sample().has_value());
  EXPECT_EQ(sampled(-1.0), 1.0);
  EXPECT_EQ(sampled(1e9), 0.0);
}

TEST(Harness, ConfigJsonRoundTrip) {
  ExperimentConfig cfg = table1_config(5, 200, 0.4, 123, 99, 7.5);
  cfg.threads = 3;
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(*back.critical, 7.5);
  EXPECT_EQ(std::get<FactorExperiment>(back.model).submodel_k, 3);

  ExperimentConfig fb;
  fb.model = FeedbackExperiment{FeedbackParams{{0.5, 0.6, -0.4, 0.8, 0.7}, Eigen::Vector4d(1, 2, 3, 4)}};
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(fb))), config_to_json(fb));
  ExperimentConfig cv;
  cv.model = CurveExperiment{PlaneCurve::Cuspidal, Eigen::Vector2d::Zero()};
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(cv))), config_to_json(cv));

  EXPECT_THROW(config_from_json("{"), std::invalid_argument);
  EXPECT_THROW(config_from_json("{\"model\": \"factor\"}"), std::invalid_argument);
}

TEST(Harness, SingleLoadingBehavesLikeIndependence) {
  // gamma = (1, 0, 0, 0) is a diagonal truth: the statistic is far below
  // chi2_2 on average
  ExperimentConfig cfg = fig3_config(Eigen::Vector4d(1, 0, 0, 0), 1000, 6);
  const ExperimentResult res = run_experiment(cfg);
  EXPECT_EQ(res.summary.failures, 0u);
  EXPECT_LT(res.summary.mean, 1.5);
  EXPECT_GT(res.summary.mean, 0.3);
}
