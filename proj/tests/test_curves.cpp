#include "conelrt/curves.hpp"
#include "conelrt/laws.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelrt;

namespace {

double mean_lrt(PlaneCurve curve, const Eigen::Vector2d& mu0, long n, int reps, std::uint64_t seed) {
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    Stream rng(seed, r);
    const Eigen::Vector2d xbar = mu0 + rng.normal_vector(2) / std::sqrt(double(n));
    sum += lrt_mean_curve(xbar, n, curve);
  }
  return sum / reps;
}

}  // namespace

TEST(Curves, CurveParameter) {
  EXPECT_NEAR(curve_parameter(PlaneCurve::Nodal, Eigen::Vector2d(3, 6)), 2.0, 1e-12);
  EXPECT_NEAR(curve_parameter(PlaneCurve::Nodal, Eigen::Vector2d(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(curve_parameter(PlaneCurve::Cuspidal, Eigen::Vector2d(4, -8)), -2.0, 1e-12);
  EXPECT_NEAR(curve_parameter(PlaneCurve::Cuspidal, Eigen::Vector2d(0, 0)), 0.0, 1e-12);
  EXPECT_THROW(curve_parameter(PlaneCurve::Cuspidal, Eigen::Vector2d(1, 0)), std::invalid_argument);
  EXPECT_EQ(parse_curve(curve_name(PlaneCurve::Nodal)), PlaneCurve::Nodal);
  EXPECT_EQ(parse_curve(curve_name(PlaneCurve::Cuspidal)), PlaneCurve::Cuspidal);
  EXPECT_THROW(parse_curve("spiral"), std::invalid_argument);
}

TEST(Curves, TangentCones) {
  // node: the tangent lines have directions (2, 2) and (-2, 2)
  const ConeDescriptor node = tangent_cone_curve(PlaneCurve::Nodal, Eigen::Vector2d::Zero());
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(1, 1), node).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(-3, 3), node).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(1, 0), node).dist2, 0.5, 1e-15);
  // cusp: the ray mu1 >= 0
  const ConeDescriptor cusp = tangent_cone_curve(PlaneCurve::Cuspidal, Eigen::Vector2d::Zero());
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(2, 0), cusp).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(-2, 1), cusp).dist2, 5.0, 1e-15);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(2, 1), cusp).dist2, 1.0, 1e-15);
  // smooth point f(2) = (3, 6): tangent (4, 11)
  const ConeDescriptor line = tangent_cone_curve(PlaneCurve::Nodal, Eigen::Vector2d(3, 6));
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(-4, -11), line).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(11, -4), line).dist2, 137.0, 1e-10);
  // cusp at t = 1: span (2, 3); node at t = 0: span (0, -1)
  const ConeDescriptor c1 = tangent_cone_curve(PlaneCurve::Cuspidal, Eigen::Vector2d(1, 1));
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(-2, -3), c1).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(3, -2), c1).dist2, 13.0, 1e-12);
  const ConeDescriptor n0 = tangent_cone_curve(PlaneCurve::Nodal, Eigen::Vector2d(-1, 0));
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(0, 5), n0).dist2, 0.0, 1e-24);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(2, 5), n0).dist2, 4.0, 1e-12);
  EXPECT_THROW(tangent_cone_curve(PlaneCurve::Nodal, Eigen::Vector2d(1, 1)), std::invalid_argument);
}

TEST(Curves, LrtVanishesOnTheCurve) {
  for (double t : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
    for (PlaneCurve curve : {PlaneCurve::Nodal, PlaneCurve::Cuspidal}) {
      EXPECT_NEAR(lrt_mean_curve(curve_point(curve, t), 1000, curve), 0.0, 1e-12);
    }
  }
  EXPECT_NEAR(lrt_mean_curve(Eigen::Vector2d(-2, 0), 10, PlaneCurve::Cuspidal), 40.0, 1e-9);
}

TEST(Curves, SingularPointsShiftTheMean) {
  // node below 1 and cusp above 1, each by at least 5 standard errors;
  // sd < 2 for both laws
  const double se = 2.0 / std::sqrt(20000.0);
  EXPECT_LT(mean_lrt(PlaneCurve::Nodal, Eigen::Vector2d::Zero(), 10000, 20000, 1), 1.0 - 5.0 * se);
  EXPECT_GT(mean_lrt(PlaneCurve::Cuspidal, Eigen::Vector2d::Zero(), 10000, 20000, 2), 1.0 + 5.0 * se);
  EXPECT_NEAR(mean_lrt(PlaneCurve::Nodal, Eigen::Vector2d(3, 6), 10000, 20000, 3), 1.0, 0.04);
}

TEST(Curves, CuspApproachesItsLimitOnlyAtHugeSampleSizes) {
  // the curvature term decays like n^(-1/4); at n = 1e12 it is negligible
  const int reps = 20000;
  std::vector<double> lam(reps);
  for (int r = 0; r < reps; ++r) {
    Stream rng(4, r);
    lam[r] = lrt_mean_curve(rng.normal_vector(2) / 1e6, 1000000000000L, PlaneCurve::Cuspidal);
  }
  const EmpiricalDist d(lam);
  const double ks = ks_one_sample(d, [](double t) { return *law_cdf(ChiBarMix{{0.5, 0.5}, {1, 2}}, t); });
  EXPECT_LT(ks, ks_critical(0.01, reps));
}
