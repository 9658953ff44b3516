#ifndef CONELRT_TESTS_ORACLES_HPP
#define CONELRT_TESTS_ORACLES_HPP

// Independent reference computations shared by the unit tests and the
// acceptance suite.  None of these call into the code under test beyond
// the random streams.

#include "conelrt/feedback.hpp"
#include "conelrt/rng.hpp"
#include "conelrt/symkit.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {

// Off-diagonal rank-one fit -----------------------------------------------------

struct OffDiagResidual : Eigen::DenseFunctor<double> {
  Eigen::MatrixXd a;
  OffDiagResidual(const Eigen::MatrixXd& mat, int npairs)
      : Eigen::DenseFunctor<double>(static_cast<int>(mat.rows()), npairs), a(mat) {}

  int operator()(const Eigen::VectorXd& g, Eigen::VectorXd& r) const {
    int p = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.rows(); ++j) r(p++) = a(i, j) - g(i) * g(j);
    return 0;
  }
  int df(const Eigen::VectorXd& g, Eigen::MatrixXd& jac) const {
    jac.setZero();
    int p = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
        jac(p, i) = -g(j);
        jac(p, j) = -g(i);
        ++p;
      }
    return 0;
  }
};

// inf over g of sum_{i<j} (a_ij - g_i g_j)^2 by Levenberg-Marquardt from
// `restarts` random starts, together with the closure values reached as
// one loading diverges.
inline double offdiag_fit_brute(const Eigen::MatrixXd& a, int restarts, std::uint64_t seed) {
  const Eigen::Index m = a.rows();
  const int npairs = static_cast<int>(m * (m - 1) / 2);
  double best = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) best += a(i, j) * a(i, j);
  for (Eigen::Index k = 0; k < m; ++k) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        if (i != k && j != k) v += a(i, j) * a(i, j);
    best = std::min(best, v);
  }
  const double scale = std::sqrt(std::max(a.cwiseAbs().maxCoeff(), 1e-12));
  OffDiagResidual fn(a, npairs);
  Eigen::VectorXd r(npairs);
  for (int s = 0; s < restarts; ++s) {
    conelrt::Stream rng(seed, static_cast<std::uint64_t>(s));
    Eigen::VectorXd g = scale * rng.normal_vector(m);
    Eigen::LevenbergMarquardt<OffDiagResidual> lm(fn);
    lm.setMaxfev(4000);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    lm.setGtol(1e-14);
    lm.minimize(g);
    fn(g, r);
    best = std::min(best, r.squaredNorm());
  }
  return best;
}

// Rank-one block fit over the eta arc --------------------------------------------

// min over u on the arc from (1, eta_low)/|.| to (0, 1) and over v of
// |block - u v'|^2, by a grid in the angle with golden-section polish.
inline double tan_block_grid(const Eigen::MatrixXd& block, double eta_low, int grid = 20001) {
  const double lo = std::atan(eta_low);
  const double hi = std::numbers::pi / 2.0;
  const double total = block.squaredNorm();
  auto f = [&](double th) {
    const Eigen::Vector2d u(std::cos(th), std::sin(th));
    return total - (block.transpose() * u).squaredNorm();
  };
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  std::vector<double> vals(grid);
  for (int k = 0; k < grid; ++k) {
    vals[k] = f(lo + (hi - lo) * k / (grid - 1));
    if (vals[k] < best) {
      best = vals[k];
      arg = k;
    }
  }
  // polish every grid-local minimum
  const double h = (hi - lo) / (grid - 1);
  for (int k = 0; k < grid; ++k) {
    const bool left = k == 0 || vals[k] <= vals[k - 1];
    const bool right = k == grid - 1 || vals[k] <= vals[k + 1];
    if (!(left && right) && k != arg) continue;
    double a = std::max(lo, lo + h * (k - 1)), b = std::min(hi, lo + h * (k + 1));
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      if (f(c) < f(d)) {
        b = d;
      } else {
        a = c;
      }
      c = b - phi * (b - a);
      d = a + phi * (b - a);
    }
    best = std::min({best, f(0.5 * (a + b)), f(lo), f(hi)});
  }
  return best;
}

// W12 + min(W13, W23) CDF --------------------------------------------------------------------

// P(W12 + min(W13, W23) <= t) = int_0^sqrt(t) 2 phi(u) (1 - (1 - F1(t - u^2))^2) du.
// With u = sqrt(t) sin(th) and 1 - F1(x) = erfc(sqrt(x / 2)) the integrand
// is smooth on [0, pi/2], so fixed Gauss-Legendre is accurate.
inline double example27_cdf(double t) {
  if (t <= 0.0) return 0.0;
  const double rt = std::sqrt(t);
  auto integrand = [&](double th) {
    const double u = rt * std::sin(th);
    const double sf = std::erfc(rt * std::cos(th) / std::sqrt(2.0));
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    return 2.0 * phi * (1.0 - sf * sf) * rt * std::cos(th);
  };
  return boost::math::quadrature::gauss<double, 40>::integrate(integrand, 0.0, std::numbers::pi / 2.0);
}

// Random points ------------------------------------------------------------------------

// A feedback coefficient vector on b31 + b32 b21 = 0 with every loop
// coefficient bounded away from zero and b32 b43 b24 away from -1.
inline conelrt::FeedbackBeta random_locus_beta(conelrt::Stream& rng) {
  auto coef = [&] {
    const double mag = 0.3 + 1.2 * rng.uniform();
    return rng.uniform() < 0.5 ? -mag : mag;
  };
  for (;;) {
    conelrt::FeedbackBeta b;
    b.b21 = coef();
    b.b24 = coef();
    b.b32 = coef();
    b.b43 = coef();
    b.b31 = -b.b32 * b.b21;
    const double loop = b.b32 * b.b43 * b.b24;
    if (std::abs(loop + 1.0) > 0.2 && std::abs(1.0 - loop) > 0.2) return b;
  }
}

inline double rel_max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace oracle

#endif  // CONELRT_TESTS_ORACLES_HPP
