#include "oracles.hpp"

#include "conelrt/factor.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace conelrt;

namespace {

// Rubin-Thayer EM for one factor, run to a fixed iteration budget.
double em_discrepancy(const Eigen::MatrixXd& s, Eigen::VectorXd gamma, Eigen::VectorXd psi, int iters) {
  const Eigen::Index m = s.rows();
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd sigma = gamma * gamma.transpose();
    sigma.diagonal() += psi;
    const Eigen::RowVectorXd beta = sigma.llt().solve(gamma).transpose();
    const double ezz = 1.0 - beta.dot(gamma) + (beta * s * beta.transpose())(0, 0);
    const Eigen::VectorXd next = s * beta.transpose() / ezz;
    for (Eigen::Index i = 0; i < m; ++i) psi(i) = std::max(1e-12, s(i, i) - next(i) * (beta * s.col(i))(0, 0));
    gamma = next;
  }
  Eigen::MatrixXd sigma = gamma * gamma.transpose();
  sigma.diagonal() += psi;
  return discrepancy(s, sigma);
}

double em_best(const Eigen::MatrixXd& s, int starts, int iters) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < starts; ++k) {
    Stream rng(77, k);
    Eigen::VectorXd gamma = rng.normal_vector(s.rows()).cwiseProduct(s.diagonal().cwiseSqrt()) * 0.7;
    Eigen::VectorXd psi = 0.5 * s.diagonal();
    best = std::min(best, em_discrepancy(s, gamma, psi, iters));
  }
  return best;
}

Eigen::MatrixXd one_factor_cov(const Eigen::VectorXd& gamma, const Eigen::VectorXd& delta) {
  Eigen::MatrixXd s = gamma * gamma.transpose();
  s.diagonal() += delta;
  return s;
}

SuffStat draw(int m, long n, std::uint64_t seed, double load = 0.6) {
  Stream rng(seed, 0);
  const Eigen::VectorXd gamma = Eigen::VectorXd::Constant(m, load);
  const Eigen::VectorXd delta = Eigen::VectorXd::Constant(m, 1.0 - load * load);
  return draw_suffstat(one_factor_cov(gamma, delta), n, rng);
}

// lrt_saturated for draw(4, 200, 7), recorded from a run that passed the EM
// comparison above.
constexpr double kAnchorLambda = 2.4524918307263999;

}  // namespace

TEST(Factor, CovFromParams) {
  FactorParams p{Eigen::Vector3d(1, 2, 3), Eigen::Vector3d::Zero()};
  EXPECT_TRUE(cov_from_params(p).values() == Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix());
  p.gamma = Eigen::Vector3d(1, -1, 2);
  const Eigen::MatrixXd s = cov_from_params(p).values();
  EXPECT_DOUBLE_EQ(s(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(s(2, 2), 7.0);
  p.delta(1) = -0.5;
  EXPECT_THROW(cov_from_params(p), std::invalid_argument);
}

TEST(Factor, TetradsVanishOnModel) {
  EXPECT_EQ(tetrads(Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(tetrads(Eigen::MatrixXd::Identity(6, 6)).size(), 2 * 15);
  for (int r = 0; r < 20; ++r) {
    Stream rng(1, r);
    const Eigen::MatrixXd s = one_factor_cov(rng.normal_vector(6), Eigen::VectorXd::Ones(6));
    EXPECT_LT(tetrads(s).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff() * s.cwiseAbs().maxCoeff()));
  }
  // a single nonzero pair never enters a tetrad product with a nonzero partner
  Eigen::MatrixXd one = Eigen::MatrixXd::Identity(5, 5);
  one(1, 3) = one(3, 1) = 0.4;
  EXPECT_EQ(tetrads(one).cwiseAbs().maxCoeff(), 0.0);
  Stream rng(2, 0);
  Eigen::MatrixXd a = rng.normal_matrix(4, 4);
  a = (a + a.transpose()).eval();
  EXPECT_GT(tetrads(a).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_THROW(tetrads(Eigen::Matrix3d::Identity()), std::invalid_argument);
}

TEST(Factor, PentadVanishesOnTwoFactorModel) {
  EXPECT_EQ(pentad(Eigen::MatrixXd::Identity(5, 5)), 0.0);
  for (int r = 0; r < 20; ++r) {
    Stream rng(3, r);
    const Eigen::MatrixXd lambda = rng.normal_matrix(5, 2);
    Eigen::MatrixXd s = lambda * lambda.transpose();
    s.diagonal() += rng.normal_vector(5).cwiseAbs();
    EXPECT_LT(std::abs(pentad(s)), 1e-10 * std::pow(std::max(1.0, s.cwiseAbs().maxCoeff()), 5));
  }
  Stream rng(4, 0);
  Eigen::MatrixXd a = rng.normal_matrix(5, 5);
  a = (a + a.transpose()).eval();
  EXPECT_GT(std::abs(pentad(a)), 1e-4);
  EXPECT_THROW(pentad(Eigen::Matrix4d::Identity()), std::invalid_argument);
}

TEST(Factor, ClassifyPoint) {
  EXPECT_TRUE(std::holds_alternative<Diagonal>(classify_point(Eigen::MatrixXd::Identity(4, 4))));
  Eigen::MatrixXd one = Eigen::MatrixXd::Identity(4, 4);
  one(0, 2) = one(2, 0) = 0.3;
  const SingularityClass c = classify_point(one);
  ASSERT_TRUE(std::holds_alternative<OneNonzero>(c));
  EXPECT_EQ(std::get<OneNonzero>(c).i, 0);
  EXPECT_EQ(std::get<OneNonzero>(c).j, 2);
  EXPECT_TRUE(std::holds_alternative<Smooth>(
      classify_point(one_factor_cov(Eigen::Vector4d(0.5, 0.5, 0.5, 0.0), Eigen::Vector4d::Ones()))));
}

TEST(Factor, DiscrepancyBasics) {
  Stream rng(5, 0);
  const Eigen::MatrixXd g = rng.normal_matrix(4, 8);
  const Eigen::MatrixXd s = g * g.transpose() / 8.0;
  EXPECT_NEAR(discrepancy(s, s), 0.0, 1e-12);
  EXPECT_GT(discrepancy(s, Eigen::MatrixXd::Identity(4, 4)), 0.0);
  EXPECT_TRUE(std::isinf(discrepancy(s, -Eigen::MatrixXd::Identity(4, 4))));
}

TEST(Factor, MleRecoversModelPoint) {
  const Eigen::Vector4d gamma(0.8, 0.7, 0.6, 0.5);
  const Eigen::Vector4d delta = (Eigen::Vector4d::Ones() - gamma.cwiseProduct(gamma));
  const FactorFit fit = fit_one_factor(one_factor_cov(gamma, delta));
  EXPECT_NEAR(fit.discrepancy, 0.0, 1e-10);
  EXPECT_LT((fit.params.gamma.cwiseAbs() - gamma).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT((fit.params.delta - delta).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(fit.discrepancy, discrepancy(one_factor_cov(gamma, delta), fit.sigma), 1e-14);
}

TEST(Factor, MleAgreesWithEm) {
  for (int r = 0; r < 30; ++r) {
    const int m = 4 + r % 3;
    const SuffStat d = draw(m, 100, 100 + r, 0.3 + 0.02 * r);
    const FactorFit fit = mle_one_factor(d);
    const double em = em_best(d.S, 5, 20000);
    EXPECT_LE(fit.discrepancy, em + 1e-7) << "draw " << r;
    if (!fit.heywood) EXPECT_NEAR(fit.discrepancy, em, 1e-6) << "draw " << r;
  }
}

TEST(Factor, MoreStartsDoNotHelp) {
  for (int r = 0; r < 20; ++r) {
    Stream rng(200, r);
    const Eigen::MatrixXd g = rng.normal_matrix(4, 6);
    const SuffStat d(g * g.transpose() / 6.0, 6);
    MleOptions few, many;
    few.random_starts = 50;
    many.random_starts = 500;
    EXPECT_NEAR(mle_one_factor(d, few).discrepancy, mle_one_factor(d, many).discrepancy, 1e-6) << "draw " << r;
    EXPECT_NEAR(mle_one_factor(d).discrepancy, mle_one_factor(d, many).discrepancy, 1e-6) << "draw " << r;
  }
}

TEST(Factor, LrtIsNonNegativeAndScaleEquivariant) {
  for (int r = 0; r < 20; ++r) {
    const SuffStat d = draw(5, 200, 300 + r);
    const double lam = lrt_saturated(d);
    EXPECT_GE(lam, 0.0);
    Eigen::VectorXd scale(5);
    scale << 1.0, 10.0, 0.1, 3.0, 0.5;
    const SuffStat scaled(scale.asDiagonal() * d.S * scale.asDiagonal(), d.n);
    EXPECT_NEAR(lrt_saturated(scaled), lam, 1e-6 * std::max(1.0, lam));
    for (int k = 1; k <= 5; ++k) EXPECT_GE(lrt_submodel(d, k), 0.0);
  }
}

TEST(Factor, SubmodelClosedForms) {
  const SuffStat d = draw(5, 300, 400);
  const double full = mle_one_factor(d).discrepancy;
  const Eigen::MatrixXd& s = d.S;
  // k = 1: independence, fitted Sigma = diag(S)
  const double indep = s.diagonal().array().log().sum() - std::log(s.determinant());
  EXPECT_NEAR(lrt_submodel(d, 1), d.n * (indep - full), 1e-6);
  EXPECT_NEAR(lrt_submodel(d, 2), lrt_submodel(d, 1), 1e-9);
  // k = 3: the leading pair keeps its 2 x 2 block
  Eigen::MatrixXd blk = s.diagonal().asDiagonal();
  blk.topLeftCorner(2, 2) = s.topLeftCorner(2, 2);
  const double pair = std::log(blk.determinant()) - std::log(s.determinant());
  EXPECT_NEAR(mle_submodel_0k(d, 3).discrepancy, pair, 1e-10);
  EXPECT_NEAR(lrt_submodel(d, 3), d.n * (pair - full), 1e-6);
  // k = m + 1 is out of range
  EXPECT_THROW(lrt_submodel(d, 6), std::invalid_argument);
}

TEST(Factor, BartlettArithmetic) {
  EXPECT_NEAR(bartlett_correct(10.0, 100, 4, 1), 10.0 * (99.0 - 13.0 / 6.0 - 2.0 / 3.0) / 100.0, 1e-14);
  EXPECT_THROW(bartlett_correct(1.0, 3, 8, 1), std::domain_error);
}

TEST(Factor, RejectsSingularInput) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Ones(4, 4);
  EXPECT_THROW(mle_one_factor(SuffStat(s, 10)), std::invalid_argument);
}

TEST(Factor, RegressionAnchor) {
  const SuffStat d = draw(4, 200, 7);
  EXPECT_NEAR(lrt_saturated(d), kAnchorLambda, 1e-8);
}
