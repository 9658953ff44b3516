#include "oracles.hpp"

#include "conelrt/cones.hpp"
#include "conelrt/laws.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelrt;

namespace {

// Alg cone by SVD: off-diagonal entries away from rows {i, j} plus the
// smaller squared singular value of the 2 x (m - 2) block.
double alg_oracle(const Eigen::VectorXd& z, int m, int i, int j) {
  const Eigen::MatrixXd a = VechVector(m, z).to_matrix();
  std::vector<int> rest;
  for (int k = 0; k < m; ++k)
    if (k != i && k != j) rest.push_back(k);
  Eigen::MatrixXd block(2, rest.size());
  double out = 0.0;
  for (std::size_t c = 0; c < rest.size(); ++c) {
    block(0, c) = a(i, rest[c]);
    block(1, c) = a(j, rest[c]);
    for (std::size_t d = c + 1; d < rest.size(); ++d) out += a(rest[c], rest[d]) * a(rest[c], rest[d]);
  }
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(block).singularValues();
  return out + sv(1) * sv(1);
}

Eigen::MatrixXd random_sym(Stream& rng, int m) {
  Eigen::MatrixXd a = rng.normal_matrix(m, m);
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST(Cones, FactoryValidation) {
  EXPECT_THROW(factor_alg_cone(4, 1, 1), std::invalid_argument);
  EXPECT_THROW(factor_alg_cone(4, 0, 4), std::invalid_argument);
  EXPECT_THROW(factor_diag_cone(1), std::invalid_argument);
  EXPECT_THROW(factor_tan_cone(4, 0, 1, -0.5), std::invalid_argument);
  EXPECT_THROW(ray(Eigen::Vector2d::Zero()), std::invalid_argument);
  EXPECT_THROW(two_lines(1.5), std::invalid_argument);
  EXPECT_THROW(union_of({}), std::invalid_argument);
  EXPECT_THROW(union_of({origin_cone(2), origin_cone(3)}), std::invalid_argument);
  EXPECT_THROW(dist2_cone(Eigen::Vector3d::Zero(), factor_diag_cone(4)), std::invalid_argument);
}

TEST(Cones, DiagConeContainsDiagonalMatrices) {
  Stream rng(1, 0);
  const Eigen::MatrixXd d = rng.normal_vector(5).asDiagonal();
  EXPECT_NEAR(dist2_cone(VechVector::from_matrix(d), factor_diag_cone(5)).dist2, 0.0, 1e-20);
  // and D + g g'
  const Eigen::VectorXd g = rng.normal_vector(5);
  const Eigen::MatrixXd s = d + g * g.transpose();
  EXPECT_NEAR(dist2_cone(VechVector::from_matrix(s), factor_diag_cone(5)).dist2, 0.0, 1e-12);
}

TEST(Cones, DiagConeMatchesBruteForce) {
  for (int r = 0; r < 40; ++r) {
    Stream rng(2, r);
    const int m = 4 + r % 2;
    const Eigen::MatrixXd a = random_sym(rng, m);
    const double ours = dist2_cone(VechVector::from_matrix(a), factor_diag_cone(m)).dist2;
    const double brute = oracle::offdiag_fit_brute(a, 100, 1000 + r);
    EXPECT_LE(ours, brute + 1e-6) << "draw " << r;
    // never better than the true infimum: the returned point is feasible
    EXPECT_GE(ours, brute - 1e-6) << "draw " << r;
  }
}

TEST(Cones, DiagConeMinimizerIsFeasible) {
  for (int r = 0; r < 40; ++r) {
    Stream rng(3, r);
    const int m = 5;
    const Eigen::VectorXd z = rng.normal_vector(vech_size(m));
    const ConeProjection p = dist2_cone(z, factor_diag_cone(m));
    EXPECT_NEAR(p.dist2, (z - p.point).squaredNorm(), 1e-12);
    const Eigen::MatrixXd s = VechVector(m, p.point).to_matrix();
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    // tetrads vanish and triads are non-negative on the closure of D + g g'
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) {
            if (i == j || i == k || i == l || j == k || j == l || k == l) continue;
            EXPECT_NEAR(s(i, j) * s(k, l) - s(i, l) * s(k, j), 0.0, 1e-6 * scale * scale);
          }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int k = j + 1; k < m; ++k) EXPECT_GE(s(i, j) * s(j, k) * s(k, i), -1e-8 * scale * scale * scale);
  }
}

TEST(Cones, DiagConeNotWorseThanZeroLoading) {
  for (int r = 0; r < 50; ++r) {
    Stream rng(4, r);
    const Eigen::MatrixXd a = random_sym(rng, 6);
    double offdiag = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) offdiag += a(i, j) * a(i, j);
    EXPECT_LE(dist2_cone(VechVector::from_matrix(a), factor_diag_cone(6)).dist2, offdiag + 1e-12);
  }
}

TEST(Cones, AlgConeMatchesSvd) {
  for (int r = 0; r < 100; ++r) {
    Stream rng(5, r);
    const int m = 4 + r % 4;
    const int a = r % m, b = (r / 2 + 1 + a) % m;
    if (a == b) continue;
    const int i = std::min(a, b), j = std::max(a, b);
    const Eigen::VectorXd z = rng.normal_vector(vech_size(m));
    const ConeProjection p = dist2_cone(z, factor_alg_cone(m, i, j));
    EXPECT_NEAR(p.dist2, alg_oracle(z, m, i, j), 1e-12);
    EXPECT_NEAR(p.dist2, (z - p.point).squaredNorm(), 1e-12);
    EXPECT_NEAR(alg_oracle(p.point, m, i, j), 0.0, 1e-20);
  }
}

TEST(Cones, TanBlockSpecialCases) {
  EXPECT_EQ(dist2_tan_cone_block(Eigen::MatrixXd::Zero(2, 3), 0.5), 0.0);
  Eigen::MatrixXd prop(2, 3);
  prop.row(0) << 1.0, -2.0, 0.5;
  prop.row(1) = 1.7 * prop.row(0);
  EXPECT_NEAR(dist2_tan_cone_block(prop, 0.5), 0.0, 1e-24);
  // multiplier below eta_low: the nearest admissible row ratio is eta_low
  prop.row(1) = 0.2 * prop.row(0);
  EXPECT_GT(dist2_tan_cone_block(prop, 0.5), 1e-3);
  // row_i = 0 is the eta -> inf limit
  prop.row(0).setZero();
  prop.row(1) << 1.0, 2.0, 3.0;
  EXPECT_NEAR(dist2_tan_cone_block(prop, 0.5), 0.0, 1e-24);
}

TEST(Cones, TanBlockMatchesGrid) {
  for (int r = 0; r < 100; ++r) {
    Stream rng(6, r);
    const Eigen::MatrixXd block = rng.normal_matrix(2, 1 + r % 4);
    const double ours = dist2_tan_cone_block(block, 0.7);
    EXPECT_NEAR(ours, oracle::tan_block_grid(block, 0.7), 1e-9);
    const Eigen::MatrixXd fit = project_tan_cone_block(block, 0.7);
    EXPECT_NEAR((block - fit).squaredNorm(), ours, 1e-12);
  }
}

TEST(Cones, TanConeSitsInsideAlgCone) {
  for (int r = 0; r < 50; ++r) {
    Stream rng(7, r);
    const Eigen::VectorXd z = rng.normal_vector(vech_size(5));
    const double alg = dist2_cone(z, factor_alg_cone(5, 1, 3)).dist2;
    const double tan = dist2_cone(z, factor_tan_cone(5, 1, 3, 0.4)).dist2;
    const double neg = dist2_cone(z, factor_tan_cone(5, 1, 3, 0.4, true)).dist2;
    EXPECT_GE(tan, alg - 1e-12);
    EXPECT_GE(neg, alg - 1e-12);
  }
}

TEST(Cones, DistanceIsHomogeneousOfDegreeTwo) {
  const std::vector<ConeDescriptor> cones = {factor_diag_cone(4), factor_alg_cone(4, 0, 2),
                                             factor_tan_cone(4, 0, 2, 0.3), two_lines(0.4)};
  for (const ConeDescriptor& cone : cones) {
    Stream rng(8, 0);
    const Eigen::VectorXd z = rng.normal_vector(ambient_dim(cone));
    const double base = dist2_cone(z, cone).dist2;
    for (double c : {0.1, 3.0}) EXPECT_NEAR(dist2_cone(c * z, cone).dist2, c * c * base, 1e-8 * c * c);
  }
}

TEST(Cones, LinearSpanGivesChiSquare) {
  Stream rng(9, 0);
  const ConeDescriptor span = linear_span(rng.normal_matrix(5, 2));
  const EmpiricalDist d = sample_cone_distance(span, 50000, 10);
  EXPECT_LT(ks_one_sample(d, [](double t) { return chisq_cdf(3, t); }), ks_critical(0.001, 50000));
  // the origin cone gives chi2 in the full dimension
  const EmpiricalDist o = sample_cone_distance(origin_cone(3), 50000, 11);
  EXPECT_LT(ks_one_sample(o, [](double t) { return chisq_cdf(3, t); }), ks_critical(0.001, 50000));
}

TEST(Cones, OrthogonalLinesGiveMinOfChiSquares) {
  const ConeDescriptor lines = union_of({ray(Eigen::Vector2d(1, 0)), ray(Eigen::Vector2d(-1, 0)),
                                         linear_span(Eigen::Vector2d(0, 1))});
  const EmpiricalDist d = sample_cone_distance(lines, 50000, 12);
  EXPECT_LT(ks_one_sample(d, [](double t) { return *law_cdf(MinIndepChiSq{2, 1}, t); }), ks_critical(0.001, 50000));
  const EmpiricalDist t = sample_cone_distance(two_lines(0.0), 50000, 13);
  EXPECT_LT(ks_two_sample(d, t), ks_critical(0.001, 50000, 50000));
}

TEST(Cones, RayProjection) {
  const ConeDescriptor r = ray(Eigen::Vector2d(1, 1));
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(-1, -1), r).dist2, 2.0, 1e-15);
  EXPECT_NEAR(dist2_cone(Eigen::Vector2d(2, 0), r).dist2, 2.0, 1e-15);
}

TEST(NestedLimits, Basics) {
  const ConeDescriptor plane = linear_span(Eigen::Matrix<double, 3, 2>::Identity());
  const EmpiricalDist same = sample_nested_limit(plane, plane, 1000, 14);
  EXPECT_NEAR(same.sorted().back(), 0.0, 1e-12);
  // origin in a plane in R^3: chi2_2
  const EmpiricalDist o = sample_nested_limit(origin_cone(3), plane, 50000, 15);
  EXPECT_LT(ks_one_sample(o, [](double t) { return chisq_cdf(2, t); }), ks_critical(0.001, 50000));
  // a line in a plane: chi2_1
  const ConeDescriptor line = linear_span(Eigen::Vector3d(1, 0, 0));
  const EmpiricalDist l = sample_nested_limit(line, plane, 50000, 16);
  EXPECT_LT(ks_one_sample(l, [](double t) { return chisq_cdf(1, t); }), ks_critical(0.001, 50000));
  // reversed nesting is detected
  EXPECT_THROW(sample_nested_limit(plane, line, 1000, 17), std::domain_error);
}

TEST(Curves, ProjectionAtOriginCases) {
  // origin lies on both curves
  EXPECT_NEAR(project_curve(Eigen::Vector2d::Zero(), PlaneCurve::Nodal).dist2, 0.0, 1e-20);
  EXPECT_NEAR(project_curve(Eigen::Vector2d::Zero(), PlaneCurve::Cuspidal).dist2, 0.0, 1e-20);
  const CurveProjection on = project_curve(curve_point(PlaneCurve::Nodal, 1.7), PlaneCurve::Nodal);
  EXPECT_NEAR(on.dist2, 0.0, 1e-24);
  EXPECT_NEAR(on.t, 1.7, 1e-12);
}

TEST(Curves, ProjectionMatchesDenseGrid) {
  for (const Eigen::Vector2d x : {Eigen::Vector2d(-2, 0), Eigen::Vector2d(0.3, -0.8), Eigen::Vector2d(-0.5, 0.05)}) {
    for (PlaneCurve curve : {PlaneCurve::Nodal, PlaneCurve::Cuspidal}) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 1000000; ++k) {
        const double t = -5.0 + 10.0 * k / 1e6;
        best = std::min(best, (x - curve_point(curve, t)).squaredNorm());
      }
      const CurveProjection p = project_curve(x, curve);
      EXPECT_LE(p.dist2, best + 1e-12);
      EXPECT_GE(p.dist2, best - 1e-9);
      EXPECT_NEAR(p.dist2, (x - curve_point(curve, p.t)).squaredNorm(), 1e-14);
    }
  }
  // (-2, 0) against the cusp: nearest point is the origin
  EXPECT_NEAR(project_curve(Eigen::Vector2d(-2, 0), PlaneCurve::Cuspidal).dist2, 4.0, 1e-12);
}
