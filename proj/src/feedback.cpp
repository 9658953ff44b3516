#include "conelrt/feedback.hpp"

#include "conelrt/optim.hpp"
#include "conelrt/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace conelrt {

Eigen::Matrix4d b_matrix(const FeedbackBeta& b) {
  Eigen::Matrix4d m;
  m << 1.0, 0.0, 0.0, 0.0,  //
      -b.b21, 1.0, 0.0, -b.b24,  //
      -b.b31, -b.b32, 1.0, 0.0,  //
      0.0, 0.0, -b.b43, 1.0;
  return m;
}

CovMatrix f_cov(const FeedbackParams& p) {
  if (std::abs(p.beta.det_b()) < 1e-12) throw std::invalid_argument("f_cov: B is singular (b32 b24 b43 = 1)");
  if ((p.omega.array() <= 0.0).any()) throw std::invalid_argument("f_cov: omega must be positive");
  const Eigen::Matrix4d binv = b_matrix(p.beta).inverse();
  Eigen::Matrix4d sigma = binv * p.omega.asDiagonal() * binv.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return CovMatrix(sigma);
}

Eigen::Matrix4d g_precision(const FeedbackBeta& b, const Eigen::Vector4d& k) {
  Eigen::Matrix4d g;
  g(0, 0) = k(0) + b.b21 * b.b21 * k(1) + b.b31 * b.b31 * k(2);
  g(0, 1) = b.b32 * b.b31 * k(2) - b.b21 * k(1);
  g(0, 2) = -b.b31 * k(2);
  g(0, 3) = b.b24 * b.b21 * k(1);
  g(1, 1) = k(1) + b.b32 * b.b32 * k(2);
  g(1, 2) = -b.b32 * k(2);
  g(1, 3) = -b.b24 * k(1);
  g(2, 2) = k(2) + b.b43 * b.b43 * k(3);
  g(2, 3) = -b.b43 * k(3);
  g(3, 3) = k(3) + b.b24 * b.b24 * k(1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

// ---------------------------------------------------------------------------

namespace {

// Coefficients around the loop, keyed by 1-based (i, j) for beta_ij.
double loop_coef(const FeedbackBeta& b, int i, int j) {
  if (i == 2 && j == 4) return b.b24;
  if (i == 3 && j == 2) return b.b32;
  if (i == 4 && j == 3) return b.b43;
  throw std::logic_error("loop_coef: not a loop edge");
}

// i - 1 and i + 1 on the cycle 2 -> 3 -> 4 -> 2
int loop_prev(int i) { return i == 2 ? 4 : i - 1; }
int loop_next(int i) { return i == 4 ? 2 : i + 1; }

bool on_singular_locus(const FeedbackBeta& b, double tol) { return std::abs(b.b31 + b.b32 * b.b21) <= tol; }

}  // namespace

Partner preimage_partner(const FeedbackBeta& b, const Eigen::Vector4d& k, double tol) {
  if (!on_singular_locus(b, tol)) throw std::invalid_argument("preimage_partner: b31 + b32 b21 must vanish");
  if (b.b32 == 0.0 || b.b43 == 0.0 || b.b24 == 0.0) {
    throw std::invalid_argument("preimage_partner: b32, b43 and b24 must be nonzero");
  }
  if (std::abs(b.b32 * b.b43 * b.b24 + 1.0) <= tol) {
    throw std::invalid_argument("preimage_partner: b32 b43 b24 = -1 has a single preimage");
  }
  if ((k.array() <= 0.0).any()) throw std::invalid_argument("preimage_partner: kappa must be positive");

  Partner out;
  out.kappa(0) = k(0);
  std::array<double, 5> nb{};  // indexed by vertex i = 2, 3, 4
  for (int i = 2; i <= 4; ++i) {
    const int im = loop_prev(i), ip = loop_next(i);
    const double bi = loop_coef(b, i, im);
    const double bm = loop_coef(b, im, ip);
    const double bp = loop_coef(b, ip, i);
    const double ki = k(i - 1), km = k(im - 1), kp = k(ip - 1);
    const double num = km * kp + ki * kp * bi * bi + ki * km * bi * bi * bm * bm;
    const double den = bi * (ki * kp + ki * km * bm * bm + km * kp * bm * bm * bp * bp);
    if (den == 0.0 || num == 0.0) throw std::invalid_argument("preimage_partner: degenerate denominator");
    nb[static_cast<std::size_t>(i)] = num / den;
    out.kappa(i - 1) = ki * bi / nb[static_cast<std::size_t>(i)];
  }
  out.beta.b21 = b.b21;
  out.beta.b24 = nb[2];
  out.beta.b32 = nb[3];
  out.beta.b43 = nb[4];
  out.beta.b31 = -out.beta.b32 * out.beta.b21;
  if (!out.kappa.allFinite() || !out.beta.vec().allFinite()) {
    throw std::invalid_argument("preimage_partner: non-finite partner");
  }
  const double gap = std::max((out.beta.vec() - b.vec()).cwiseAbs().maxCoeff(), (out.kappa - k).cwiseAbs().maxCoeff());
  out.coincides = gap <= 1e-12 * (1.0 + std::max(b.vec().cwiseAbs().maxCoeff(), k.cwiseAbs().maxCoeff()));
  return out;
}

IdentClass ident_class(const FeedbackBeta& b, double tol) {
  if (!on_singular_locus(b, tol)) return Global{};
  if (std::abs(b.b32 * b.b43 * b.b24 + 1.0) <= tol) return GlobalDetBranch{};
  if (std::abs(b.b32) <= tol || std::abs(b.b43) <= tol || std::abs(b.b24) <= tol) return GlobalZeroBranch{};
  return LocalTwo{};
}

const char* ident_class_name(const IdentClass& c) {
  switch (c.index()) {
    case 0:
      return "Global";
    case 1:
      return "LocalTwo";
    case 2:
      return "GlobalZeroBranch";
    default:
      return "GlobalDetBranch";
  }
}

SingularNormals singular_normals(const FeedbackParams& p, double tol) {
  const FeedbackBeta& b = p.beta;
  if (!on_singular_locus(b, tol)) throw std::invalid_argument("singular_normals: b31 + b32 b21 must vanish");
  const Eigen::Vector4d& w = p.omega;
  const double num = b.b43 * (w(2) + b.b32 * b.b32 * w(1) + b.b32 * b.b32 * b.b24 * b.b24 * w(3));
  const double den = w(3) + b.b43 * b.b43 * w(2) + b.b32 * b.b32 * b.b43 * b.b43 * w(1);
  SingularNormals out{VechVector::zeros(4), VechVector::zeros(4)};
  out.eta(0, 2) = b.b43;
  out.eta(0, 3) = -1.0;
  out.eta_bar(0, 2) = 1.0;
  out.eta_bar(0, 3) = -num / den;
  return out;
}

double cone_angle_rho(const FeedbackParams& p, double tol) {
  const FeedbackBeta& b = p.beta;
  if (!on_singular_locus(b, tol)) throw std::invalid_argument("cone_angle_rho: b31 + b32 b21 must vanish");
  if ((p.omega.array() <= 0.0).any()) throw std::invalid_argument("cone_angle_rho: omega must be positive");
  const Eigen::Vector4d& w = p.omega;
  const double b32s = b.b32 * b.b32;
  const double num = b.b43 * w(2) + b.b43 * b32s * w(1) - b.b24 * b.b32 * w(3);
  const double d1 = w(2) + b32s * w(1) + b.b24 * b.b24 * b32s * w(3);
  const double d2 = w(3) + b.b43 * b.b43 * w(2) + b32s * b.b43 * b.b43 * w(1);
  return std::clamp(num / std::sqrt(d1 * d2), -1.0, 1.0);
}

double hypersurface_residual(const Eigen::Matrix4d& s) {
  auto t = [&](int i, int j) { return s(i - 1, j - 1); };
  const double s11 = t(1, 1), s12 = t(1, 2), s13 = t(1, 3), s14 = t(1, 4), s22 = t(2, 2), s23 = t(2, 3),
               s24 = t(2, 4), s33 = t(3, 3), s34 = t(3, 4), s44 = t(4, 4);
  return s13 * s14 * s14 * s14 * s23 * s23 - 2.0 * s13 * s13 * s14 * s14 * s23 * s24 +
         s13 * s13 * s13 * s14 * s24 * s24 - s12 * s14 * s14 * s14 * s23 * s33 +
         s12 * s13 * s14 * s14 * s24 * s33 + s11 * s14 * s14 * s23 * s24 * s33 -
         s11 * s13 * s14 * s24 * s24 * s33 + s12 * s12 * s14 * s14 * s33 * s34 -
         s11 * s14 * s14 * s22 * s33 * s34 - s12 * s12 * s13 * s14 * s34 * s34 +
         s11 * s13 * s14 * s22 * s34 * s34 + s12 * s13 * s13 * s14 * s23 * s44 -
         s11 * s13 * s14 * s23 * s23 * s44 - s12 * s13 * s13 * s13 * s24 * s44 +
         s11 * s13 * s13 * s23 * s24 * s44 - s12 * s12 * s13 * s14 * s33 * s44 +
         s11 * s13 * s14 * s22 * s33 * s44 + s12 * s12 * s13 * s13 * s34 * s44 -
         s11 * s13 * s13 * s22 * s34 * s44;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

namespace {

// Profiled discrepancy in beta = (b21, b24, b31, b32, b43):
//   log s11 + sum_{i>=2} log(b_i' S b_i) - 2 log|det B| - log det S.
struct FeedbackObjective {
  const Eigen::Matrix4d& s;
  double logdet_s;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const FeedbackBeta b{x(0), x(1), x(2), x(3), x(4)};
    const double det = b.det_b();
    if (!x.allFinite() || det == 0.0) return std::numeric_limits<double>::infinity();
    const Eigen::Matrix4d bm = b_matrix(b);
    const Eigen::Matrix4d sb = s * bm.transpose();  // column i is S b_i
    double f = std::log(s(0, 0)) - 2.0 * std::log(std::abs(det)) - logdet_s;
    std::array<double, 4> q{};
    for (int i = 1; i < 4; ++i) {
      q[static_cast<std::size_t>(i)] = bm.row(i).dot(sb.col(i));
      if (!(q[static_cast<std::size_t>(i)] > 0.0)) return std::numeric_limits<double>::infinity();
      f += std::log(q[static_cast<std::size_t>(i)]);
    }
    if (grad) {
      grad->resize(5);
      (*grad)(0) = -2.0 * sb(0, 1) / q[1];
      (*grad)(1) = -2.0 * sb(3, 1) / q[1] + 2.0 * b.b32 * b.b43 / det;
      (*grad)(2) = -2.0 * sb(0, 2) / q[2];
      (*grad)(3) = -2.0 * sb(1, 2) / q[2] + 2.0 * b.b24 * b.b43 / det;
      (*grad)(4) = -2.0 * sb(2, 3) / q[3] + 2.0 * b.b32 * b.b24 / det;
    }
    return f;
  }

  Eigen::Vector4d kappa(const FeedbackBeta& b) const {
    const Eigen::Matrix4d bm = b_matrix(b);
    const Eigen::Matrix4d m = bm * s * bm.transpose();
    return m.diagonal().cwiseInverse();
  }
};

// Regressions that ignore the b24 edge.
FeedbackBeta moment_start(const Eigen::Matrix4d& s) {
  FeedbackBeta b;
  b.b21 = s(1, 0) / s(0, 0);
  const Eigen::Matrix2d s12 = s.topLeftCorner<2, 2>();
  const Eigen::Vector2d c = s12.ldlt().solve(Eigen::Vector2d(s(2, 0), s(2, 1)));
  b.b31 = c(0);
  b.b32 = c(1);
  b.b43 = s(3, 2) / s(2, 2);
  return b;
}

}  // namespace

FeedbackFit mle_feedback(const SuffStat& d, const FeedbackMleOptions& opts) {
  if (d.m != 4) throw std::invalid_argument("mle_feedback: need m = 4");
  if (!is_positive_definite(d.S)) throw std::invalid_argument("mle_feedback: S is not positive definite");
  const Eigen::Matrix4d s = d.S;
  Eigen::LLT<Eigen::Matrix4d> llt(s);
  FeedbackObjective obj{s, 2.0 * llt.matrixLLT().diagonal().array().log().sum()};
  Objective fn = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return obj(x, g); };

  MinimizeOptions mo;
  mo.grad_tol = opts.grad_tol;
  mo.max_iter = opts.max_iter;
  mo.initial_step = 0.1;

  MinimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  auto run = [&](const FeedbackBeta& start) {
    const Eigen::VectorXd x0 = start.vec();
    if (!x0.allFinite()) return;
    MinimizeResult r = minimize_bfgs(fn, x0, mo);
    if (r.value < best.value) best = std::move(r);
  };
  auto run_partner = [&](const FeedbackBeta& b) {
    // The second preimage branch is only defined on the singular locus;
    // project there first.
    FeedbackBeta on = b;
    on.b31 = -on.b32 * on.b21;
    try {
      run(preimage_partner(on, obj.kappa(on)).beta);
    } catch (const std::invalid_argument&) {
    }
  };

  const FeedbackBeta ms = moment_start(s);
  run(ms);
  FeedbackBeta ms_loop = ms;
  ms_loop.b24 = 0.1;
  run_partner(ms_loop);
  for (int r = 0; r < opts.random_starts; ++r) {
    Stream stream(opts.seed, static_cast<std::uint64_t>(r));
    Eigen::Matrix<double, 5, 1> v;
    for (int i = 0; i < 5; ++i) v(i) = stream.normal();
    run(FeedbackBeta::from_vec(v));
  }
  if (!std::isfinite(best.value)) throw std::runtime_error("mle_feedback: no start produced a finite objective");
  run_partner(FeedbackBeta{best.x(0), best.x(1), best.x(2), best.x(3), best.x(4)});

  FeedbackFit fit;
  fit.params.beta = FeedbackBeta{best.x(0), best.x(1), best.x(2), best.x(3), best.x(4)};
  fit.params.omega = obj.kappa(fit.params.beta).cwiseInverse();
  fit.discrepancy = std::max(0.0, best.value);
  fit.lambda = static_cast<double>(d.n) * fit.discrepancy;
  fit.grad_norm = best.grad_norm;
  fit.converged = best.converged || best.grad_norm < 1e-6;
  return fit;
}

}  // namespace conelrt
