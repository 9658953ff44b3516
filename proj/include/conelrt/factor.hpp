#ifndef CONELRT_FACTOR_HPP
#define CONELRT_FACTOR_HPP

#include "conelrt/suffstat.hpp"
#include "conelrt/symkit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>

namespace conelrt {

/// One-factor parameters: Sigma = diag(delta) + gamma gamma'.
struct FactorParams {
  Eigen::VectorXd delta;
  Eigen::VectorXd gamma;
};

CovMatrix cov_from_params(const FactorParams& p);

/// Tetrads s_ij s_gh - s_ig s_jh and s_ih s_jg - s_ig s_jh for every
/// i < j < g < h, in lexicographic order of (i, j, g, h).  Needs m >= 4.
Eigen::VectorXd tetrads(const Eigen::MatrixXd& sigma);

/// The degree-5 pentad polynomial of a 5 x 5 matrix.
double pentad(const Eigen::MatrixXd& sigma);

struct Smooth {};
struct OneNonzero {
  int i = 0;
  int j = 1;
};
struct Diagonal {};
using SingularityClass = std::variant<Smooth, OneNonzero, Diagonal>;

/// Classifies by the number of off-diagonal correlations with absolute
/// value above tol.
SingularityClass classify_point(const Eigen::MatrixXd& sigma, double tol = 1e-9);

/// log det Sigma + tr(S Sigma^-1) - log det S - m; zero iff Sigma = S.
/// Returns +inf if Sigma is not positive definite.
double discrepancy(const Eigen::MatrixXd& s, const Eigen::MatrixXd& sigma);

/// Zero-mean Gaussian log-likelihood of n observations with statistic S.
double gaussian_loglik(const SuffStat& d, const Eigen::MatrixXd& sigma);

struct MleOptions {
  int random_starts = 2;
  std::uint64_t seed = 0x243f6a8885a308d3ULL;
  double grad_tol = 1e-7;
  int max_iter = 200;
  double delta_floor = 1e-8;
};

struct FactorFit {
  FactorParams params;
  Eigen::MatrixXd sigma;
  double discrepancy = 0.0;  // at sigma
  double loglik = 0.0;
  double grad_norm = 0.0;  // in (log delta, gamma) coordinates
  bool heywood = false;    // some delta sits at the floor
  bool converged = false;
};

/// Maximum likelihood in the one-factor model.  The loadings are profiled
/// out (top eigenpair of Psi^{-1/2} S Psi^{-1/2}) and the uniquenesses are
/// optimized by quasi-Newton from several starts.  Throws
/// std::invalid_argument if S is not positive definite.
FactorFit mle_one_factor(const SuffStat& d, const MleOptions& opts = {});

/// Same fit for a bare matrix (n only affects loglik).
FactorFit fit_one_factor(const Eigen::MatrixXd& s, const MleOptions& opts = {});

/// n * min discrepancy over the one-factor model, clamped at 0.
double lrt_saturated(const SuffStat& d, const MleOptions& opts = {});

/// Fit in F_{m,0k}: one-factor structure on the leading k-1 variables,
/// independent remaining variables.  k is 1-based as in the model name.
FactorFit mle_submodel_0k(const SuffStat& d, int k, const MleOptions& opts = {});

/// 2 (sup over F_{m,1} - sup over F_{m,0k}), clamped at 0.
double lrt_submodel(const SuffStat& d, int k, const MleOptions& opts = {});

/// lambda * (n - 1 - (2m + 5)/6 - 2 l / 3) / n.  Throws std::domain_error
/// if the multiplier is not positive.
double bartlett_correct(double lambda, long n, int m, int l = 1);

}  // namespace conelrt

#endif  // CONELRT_FACTOR_HPP
