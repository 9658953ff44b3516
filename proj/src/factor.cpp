#include "conelrt/factor.hpp"

#include "conelrt/optim.hpp"
#include "conelrt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace conelrt {

CovMatrix cov_from_params(const FactorParams& p) {
  if (p.delta.size() != p.gamma.size() || p.delta.size() < 1) {
    throw std::invalid_argument("cov_from_params: delta and gamma must have the same positive length");
  }
  if ((p.delta.array() <= 0.0).any()) throw std::invalid_argument("cov_from_params: delta must be positive");
  Eigen::MatrixXd sigma = p.gamma * p.gamma.transpose();
  sigma.diagonal() += p.delta;
  return CovMatrix(std::move(sigma));
}

Eigen::VectorXd tetrads(const Eigen::MatrixXd& s) {
  const int m = static_cast<int>(s.rows());
  if (m < 4 || s.cols() != m) throw std::invalid_argument("tetrads: need a square matrix with m >= 4");
  std::vector<double> out;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int g = j + 1; g < m; ++g)
        for (int h = g + 1; h < m; ++h) {
          out.push_back(s(i, j) * s(g, h) - s(i, g) * s(j, h));
          out.push_back(s(i, h) * s(j, g) - s(i, g) * s(j, h));
        }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

double pentad(const Eigen::MatrixXd& s) {
  if (s.rows() != 5 || s.cols() != 5) throw std::invalid_argument("pentad: need a 5 x 5 matrix");
  auto t = [&](int i, int j) { return s(i - 1, j - 1); };
  return t(1, 2) * t(1, 3) * t(2, 4) * t(3, 5) * t(4, 5) - t(1, 2) * t(1, 3) * t(2, 5) * t(3, 4) * t(4, 5) -
         t(1, 2) * t(1, 4) * t(2, 3) * t(3, 5) * t(4, 5) + t(1, 2) * t(1, 4) * t(2, 5) * t(3, 4) * t(3, 5) +
         t(1, 2) * t(1, 5) * t(2, 3) * t(3, 4) * t(4, 5) - t(1, 2) * t(1, 5) * t(2, 4) * t(3, 4) * t(3, 5) +
         t(1, 3) * t(1, 4) * t(2, 3) * t(2, 5) * t(4, 5) - t(1, 3) * t(1, 4) * t(2, 4) * t(2, 5) * t(3, 5) -
         t(1, 3) * t(1, 5) * t(2, 3) * t(2, 4) * t(4, 5) + t(1, 3) * t(1, 5) * t(2, 4) * t(2, 5) * t(3, 4) -
         t(1, 4) * t(1, 5) * t(2, 3) * t(2, 5) * t(3, 4) + t(1, 4) * t(1, 5) * t(2, 3) * t(2, 4) * t(3, 5);
}

SingularityClass classify_point(const Eigen::MatrixXd& s, double tol) {
  const int m = static_cast<int>(s.rows());
  int count = 0;
  OneNonzero first;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double r = s(i, j) / std::sqrt(s(i, i) * s(j, j));
      if (std::abs(r) > tol) {
        if (count == 0) first = {i, j};
        ++count;
      }
    }
  if (count == 0) return Diagonal{};
  if (count == 1) return first;
  return Smooth{};
}

double discrepancy(const Eigen::MatrixXd& s, const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> lsig(sigma);
  Eigen::LLT<Eigen::MatrixXd> ls(s);
  if (lsig.info() != Eigen::Success || ls.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet_sigma = 2.0 * lsig.matrixLLT().diagonal().array().log().sum();
  const double logdet_s = 2.0 * ls.matrixLLT().diagonal().array().log().sum();
  const double tr = lsig.solve(s).trace();
  return logdet_sigma + tr - logdet_s - static_cast<double>(s.rows());
}

double gaussian_loglik(const SuffStat& d, const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> lsig(sigma);
  if (lsig.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * lsig.matrixLLT().diagonal().array().log().sum();
  const double tr = lsig.solve(d.S).trace();
  const double m = static_cast<double>(d.m);
  return -0.5 * static_cast<double>(d.n) * (m * std::log(2.0 * std::numbers::pi) + logdet + tr);
}

// ---------------------------------------------------------------------------
// One-factor maximum likelihood

namespace {

struct Profile {
  const Eigen::MatrixXd& s;
  Eigen::VectorXd scale;  // s_ii
  double floor;

  Eigen::VectorXd psi(const Eigen::VectorXd& x) const {
    return scale.array() * (floor + x.array().square());
  }

  // Optimal loadings for fixed uniquenesses.
  Eigen::VectorXd loadings(const Eigen::VectorXd& psi, double* value) const {
    const Eigen::VectorXd r = psi.array().rsqrt();
    const Eigen::MatrixXd a = r.asDiagonal() * s * r.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd& th = es.eigenvalues();
    const Eigen::Index top = th.size() - 1;
    if (value) {
      double f = 0.0;
      for (Eigen::Index k = 0; k < th.size(); ++k) {
        if (k == top && th(k) > 1.0) continue;
        f += th(k) - std::log(th(k)) - 1.0;
      }
      *value = f;
    }
    const double lift = std::sqrt(std::max(th(top) - 1.0, 0.0));
    return psi.array().sqrt() * es.eigenvectors().col(top).array() * lift;
  }

  // G = Sigma^-1 - Sigma^-1 S Sigma^-1
  Eigen::MatrixXd g_matrix(const Eigen::VectorXd& psi, const Eigen::VectorXd& gamma) const {
    const Eigen::VectorXd pinv = psi.cwiseInverse();
    const Eigen::VectorXd w = pinv.cwiseProduct(gamma);
    Eigen::MatrixXd inv = -w * w.transpose() / (1.0 + gamma.dot(w));
    inv.diagonal() += pinv;
    return inv - inv * s * inv;
  }

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    if (!x.allFinite() || (x.array().abs() > 1e6).any()) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd p = psi(x);
    double f = 0.0;
    const Eigen::VectorXd gamma = loadings(p, &f);
    if (grad) {
      const Eigen::MatrixXd g = g_matrix(p, gamma);
      *grad = (2.0 * scale.array() * x.array() * g.diagonal().array()).matrix();
    }
    return f;
  }
};

Eigen::VectorXd to_x(const Eigen::VectorXd& psi, const Profile& prof) {
  Eigen::VectorXd x(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double rel = psi(i) / prof.scale(i) - prof.floor;
    x(i) = std::sqrt(std::max(rel, 1e-12));
  }
  return x;
}

}  // namespace

FactorFit fit_one_factor(const Eigen::MatrixXd& s, const MleOptions& opts) {
  const Eigen::Index m = s.rows();
  if (m < 1 || s.cols() != m) throw std::invalid_argument("fit_one_factor: S must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success || !is_positive_definite(s)) {
    throw std::invalid_argument("fit_one_factor: S is not positive definite");
  }
  Profile prof{s, s.diagonal(), opts.delta_floor};

  std::vector<Eigen::VectorXd> starts;
  const Eigen::VectorXd sinv_diag = llt.solve(Eigen::MatrixXd::Identity(m, m)).diagonal();
  const double frac = 1.0 - 0.5 / static_cast<double>(m);
  starts.push_back(to_x((frac * sinv_diag.cwiseInverse()).cwiseMin(0.95 * prof.scale), prof));
  for (int r = 0; r < opts.random_starts; ++r) {
    Stream stream(opts.seed, static_cast<std::uint64_t>(r));
    Eigen::VectorXd x(m);
    for (Eigen::Index i = 0; i < m; ++i) x(i) = std::sqrt(0.05 + 0.9 * stream.uniform());
    starts.push_back(std::move(x));
  }

  MinimizeOptions mo;
  mo.grad_tol = opts.grad_tol;
  mo.max_iter = opts.max_iter;
  mo.initial_step = 0.5;
  Objective fn = [&prof](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return prof(x, g); };
  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    MinimizeResult r = minimize_bfgs(fn, x0, mo);
    if (r.value < best.value) best = std::move(r);
  }

  FactorFit fit;
  bool interior = std::isfinite(best.value);
  if (interior) {
    const Eigen::VectorXd psi = prof.psi(best.x);
    fit.params.delta = psi;
    fit.params.gamma = prof.loadings(psi, nullptr);
    fit.discrepancy = best.value;
    fit.heywood = (best.x.array().square() < opts.delta_floor).any();
  } else {
    fit.discrepancy = std::numeric_limits<double>::infinity();
  }

  // Boundary candidates delta_k at the floor.  There x_k is (up to the
  // floor) the factor itself, so the other variables are plain regressions
  // on x_k.
  for (Eigen::Index k = 0; k < m; ++k) {
    FactorParams cand;
    cand.delta = Eigen::VectorXd(m);
    cand.gamma = Eigen::VectorXd(m);
    const double skk = s(k, k);
    cand.delta(k) = opts.delta_floor * skk;
    cand.gamma(k) = std::sqrt(skk - cand.delta(k));
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == k) continue;
      cand.gamma(j) = s(j, k) / cand.gamma(k);
      cand.delta(j) = std::max(s(j, j) - s(j, k) * s(j, k) / skk, opts.delta_floor * s(j, j));
    }
    Eigen::MatrixXd sigma = cand.gamma * cand.gamma.transpose();
    sigma.diagonal() += cand.delta;
    const double v = discrepancy(s, sigma);
    if (v < fit.discrepancy) {
      fit.discrepancy = v;
      fit.params = std::move(cand);
      fit.heywood = true;
      interior = false;
    }
  }
  if (!std::isfinite(fit.discrepancy)) throw std::runtime_error("fit_one_factor: no finite fit found");

  const Eigen::VectorXd psi = fit.params.delta;
  if (fit.params.gamma.size() > 0) {
    Eigen::Index big = 0;
    fit.params.gamma.cwiseAbs().maxCoeff(&big);
    if (fit.params.gamma(big) < 0.0) fit.params.gamma = -fit.params.gamma;
  }
  fit.sigma = fit.params.gamma * fit.params.gamma.transpose();
  fit.sigma.diagonal() += psi;
  fit.discrepancy = std::max(0.0, fit.discrepancy);

  const Eigen::MatrixXd g = prof.g_matrix(psi, fit.params.gamma);
  Eigen::VectorXd full(2 * m);
  full.head(m) = psi.cwiseProduct(g.diagonal());
  full.tail(m) = 2.0 * g * fit.params.gamma;
  fit.grad_norm = full.norm();
  fit.converged = fit.heywood || fit.grad_norm < 1e-7 || (interior && best.converged);
  return fit;
}

FactorFit mle_one_factor(const SuffStat& d, const MleOptions& opts) {
  FactorFit fit = fit_one_factor(d.S, opts);
  fit.loglik = gaussian_loglik(d, fit.sigma);
  return fit;
}

double lrt_saturated(const SuffStat& d, const MleOptions& opts) {
  const FactorFit fit = fit_one_factor(d.S, opts);
  return std::max(0.0, static_cast<double>(d.n) * fit.discrepancy);
}

FactorFit mle_submodel_0k(const SuffStat& d, int k, const MleOptions& opts) {
  const int m = d.m;
  if (k < 1 || k > m) throw std::invalid_argument("mle_submodel_0k: need 1 <= k <= m");
  if (!is_positive_definite(d.S)) throw std::invalid_argument("mle_submodel_0k: S is not positive definite");
  const int p = k - 1;
  FactorFit fit;
  fit.params.delta = d.S.diagonal();
  fit.params.gamma = Eigen::VectorXd::Zero(m);
  fit.converged = true;
  if (p == 2) {
    const double s11 = d.S(0, 0), s22 = d.S(1, 1), s12 = d.S(0, 1);
    const double g1 = std::sqrt(std::abs(s12) * std::sqrt(s11 / s22));
    const double g2 = std::sqrt(std::abs(s12) * std::sqrt(s22 / s11));
    fit.params.gamma(0) = g1;
    fit.params.gamma(1) = s12 < 0.0 ? -g2 : g2;
    fit.params.delta(0) = s11 - g1 * g1;
    fit.params.delta(1) = s22 - g2 * g2;
  } else if (p >= 3) {
    const FactorFit block = fit_one_factor(d.S.topLeftCorner(p, p), opts);
    fit.params.delta.head(p) = block.params.delta;
    fit.params.gamma.head(p) = block.params.gamma;
    fit.heywood = block.heywood;
    fit.converged = block.converged;
    fit.grad_norm = block.grad_norm;
  }
  fit.sigma = fit.params.gamma * fit.params.gamma.transpose();
  fit.sigma.diagonal() += fit.params.delta;
  fit.discrepancy = std::max(0.0, discrepancy(d.S, fit.sigma));
  fit.loglik = gaussian_loglik(d, fit.sigma);
  return fit;
}

double lrt_submodel(const SuffStat& d, int k, const MleOptions& opts) {
  const FactorFit full = fit_one_factor(d.S, opts);
  const FactorFit sub = mle_submodel_0k(d, k, opts);
  return std::max(0.0, static_cast<double>(d.n) * (sub.discrepancy - full.discrepancy));
}

double bartlett_correct(double lambda, long n, int m, int l) {
  const double nn = static_cast<double>(n);
  const double mult = (nn - 1.0 - (2.0 * m + 5.0) / 6.0 - 2.0 * l / 3.0) / nn;
  if (!(mult > 0.0)) throw std::domain_error("bartlett_correct: nonpositive multiplier; n is too small");
  return lambda * mult;
}

}  // namespace conelrt
