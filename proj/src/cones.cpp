#include "conelrt/cones.hpp"

#include "conelrt/rng.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace conelrt {

ConeDescriptor linear_span(const Eigen::MatrixXd& basis) {
  if (basis.rows() < 1) throw std::invalid_argument("linear_span: ambient dimension must be >= 1");
  LinearSpan span{basis, Eigen::MatrixXd(basis.rows(), 0)};
  if (basis.cols() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    qr.setThreshold(1e-12);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), rank);
    span.orthonormal = std::move(q);
  }
  return ConeDescriptor{std::move(span)};
}

ConeDescriptor origin_cone(int k) { return linear_span(Eigen::MatrixXd(k, 0)); }

ConeDescriptor ray(const Eigen::VectorXd& direction) {
  const double nrm = direction.norm();
  if (direction.size() < 1 || !(nrm > 0.0)) throw std::invalid_argument("ray: direction must be nonzero");
  return ConeDescriptor{Ray{direction / nrm}};
}

ConeDescriptor union_of(std::vector<ConeDescriptor> members) {
  if (members.empty()) throw std::invalid_argument("union_of: at least one member is required");
  const int k = ambient_dim(members.front());
  for (const auto& c : members) {
    if (ambient_dim(c) != k) throw std::invalid_argument("union_of: members live in different dimensions");
  }
  return ConeDescriptor{UnionOf{std::move(members)}};
}

ConeDescriptor factor_diag_cone(int m, int random_starts) {
  if (m < 2) throw std::invalid_argument("factor_diag_cone: m must be >= 2");
  if (random_starts < 0) throw std::invalid_argument("factor_diag_cone: negative start count");
  return ConeDescriptor{FactorDiagCone{m, random_starts}};
}

namespace {
void check_pair(int m, int i, int j, const char* who) {
  if (m < 4) throw std::invalid_argument(std::string(who) + ": m must be >= 4");
  if (i < 0 || j >= m || i >= j) throw std::invalid_argument(std::string(who) + ": need 0 <= i < j < m");
}
}  // namespace

ConeDescriptor factor_alg_cone(int m, int i, int j) {
  check_pair(m, i, j, "factor_alg_cone");
  return ConeDescriptor{FactorAlgCone{m, i, j}};
}

ConeDescriptor factor_tan_cone(int m, int i, int j, double eta_low, bool negative) {
  check_pair(m, i, j, "factor_tan_cone");
  if (!(eta_low >= 0.0) || !std::isfinite(eta_low)) {
    throw std::invalid_argument("factor_tan_cone: eta_low must be finite and >= 0");
  }
  return ConeDescriptor{FactorTanCone{m, i, j, eta_low, negative}};
}

ConeDescriptor two_lines(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::invalid_argument("two_lines: rho must lie in [-1, 1]");
  return ConeDescriptor{TwoLines{rho}};
}

int ambient_dim(const ConeDescriptor& cone) {
  struct Visitor {
    int operator()(const LinearSpan& c) const { return static_cast<int>(c.basis.rows()); }
    int operator()(const UnionOf& c) const { return ambient_dim(c.members.front()); }
    int operator()(const Ray& c) const { return static_cast<int>(c.direction.size()); }
    int operator()(const FactorDiagCone& c) const { return vech_size(c.m); }
    int operator()(const FactorAlgCone& c) const { return vech_size(c.m); }
    int operator()(const FactorTanCone& c) const { return vech_size(c.m); }
    int operator()(const TwoLines&) const { return 2; }
  };
  return std::visit(Visitor{}, cone.kind);
}

// ---------------------------------------------------------------------------
// 2 x c block geometry

namespace {

struct Sym2 {
  double a, b, c;  // [[a, b], [b, c]]
  double lambda_max() const { return 0.5 * (a + c) + std::hypot(0.5 * (a - c), b); }
  double lambda_min() const {
    const double top = lambda_max();
    if (top <= 0.0) return 0.0;
    return std::max(0.0, (a * c - b * b) / top);
  }
  // angle of the top eigenvector, mapped into [0, pi)
  double top_angle() const {
    double theta = 0.5 * std::atan2(2.0 * b, a - c);
    if (theta < 0.0) theta += std::numbers::pi;
    return theta;
  }
  double form(double theta) const {
    const double cs = std::cos(theta), sn = std::sin(theta);
    return a * cs * cs + 2.0 * b * cs * sn + c * sn * sn;
  }
};

Sym2 gram(const Eigen::MatrixXd& block) {
  return {block.row(0).squaredNorm(), block.row(0).dot(block.row(1)), block.row(1).squaredNorm()};
}

// Angle on [atan(eta_low), pi/2] maximizing u(theta)' P u(theta).
double best_arc_angle(const Sym2& p, double eta_low) {
  const double lo = std::atan(eta_low);
  const double hi = 0.5 * std::numbers::pi;
  const double top = p.top_angle();
  if (top >= lo && top <= hi) return top;
  return p.form(lo) >= p.form(hi) ? lo : hi;
}

Eigen::MatrixXd rank_one_along(const Eigen::MatrixXd& block, double theta) {
  Eigen::Vector2d u(std::cos(theta), std::sin(theta));
  return u * (u.transpose() * block);
}

std::vector<int> complement(int m, int i, int j) {
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(m - 2));
  for (int g = 0; g < m; ++g)
    if (g != i && g != j) rest.push_back(g);
  return rest;
}

Eigen::MatrixXd extract_block(const Eigen::VectorXd& z, int m, int i, int j, const std::vector<int>& rest) {
  Eigen::MatrixXd block(2, static_cast<Eigen::Index>(rest.size()));
  for (std::size_t c = 0; c < rest.size(); ++c) {
    block(0, static_cast<Eigen::Index>(c)) = z(vech_index_sym(i, rest[c], m));
    block(1, static_cast<Eigen::Index>(c)) = z(vech_index_sym(j, rest[c], m));
  }
  return block;
}

}  // namespace

double dist2_tan_cone_block(const Eigen::MatrixXd& block, double eta_low) {
  if (block.rows() != 2) throw std::invalid_argument("dist2_tan_cone_block: block must have two rows");
  if (!(eta_low >= 0.0)) throw std::invalid_argument("dist2_tan_cone_block: eta_low must be >= 0");
  const Sym2 p = gram(block);
  const double theta = best_arc_angle(p, eta_low);
  return std::max(0.0, p.a + p.c - p.form(theta));
}

Eigen::MatrixXd project_tan_cone_block(const Eigen::MatrixXd& block, double eta_low) {
  if (block.rows() != 2) throw std::invalid_argument("project_tan_cone_block: block must have two rows");
  if (!(eta_low >= 0.0)) throw std::invalid_argument("project_tan_cone_block: eta_low must be >= 0");
  return rank_one_along(block, best_arc_angle(gram(block), eta_low));
}

// ---------------------------------------------------------------------------
// Off-diagonal rank-one fit

namespace {

double offdiag_loss(const Eigen::MatrixXd& a, const Eigen::VectorXd& g) {
  const Eigen::Index m = a.rows();
  double s = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double r = a(i, j) - g(i) * g(j);
      s += r * r;
    }
  return s;
}

// A few coordinate-descent sweeps (each update is the exact minimizer in
// g_i), then damped Newton with the exact Hessian.  Starts that drift off
// to infinity approach a star closure point, which is scored separately.
// Along the valley of star k the loss behaves like star_k + c / g_k^2, so
// a path still above star_k there can only beat it at a finite minimum
// near that star; the near-star starts in fit_offdiag_rank_one cover
// those, and such paths are abandoned.
double coordinate_descent(const Eigen::MatrixXd& a, Eigen::VectorXd& g, const Eigen::VectorXd& star) {
  constexpr int kSweeps = 8;
  constexpr int kNewtonIters = 200;
  const Eigen::Index m = a.rows();
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double num = 0.0, den = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == i) continue;
        num += a(i, j) * g(j);
        den += g(j) * g(j);
      }
      g(i) = den > 0.0 ? num / den : 0.0;
    }
  }
  double loss = offdiag_loss(a, g);
  const double scale = std::sqrt(std::max(a.cwiseAbs().maxCoeff(), 1e-300));
  const double blowup = 1e4 * scale;
  double mu = 1e-3;
  Eigen::VectorXd grad(m);
  Eigen::MatrixXd hess(m, m);
  for (int it = 0; it < kNewtonIters; ++it) {
    grad.setZero();
    for (Eigen::Index k = 0; k < m; ++k) {
      double gg = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == k) continue;
        const double r = a(k, j) - g(k) * g(j);
        grad(k) -= 2.0 * r * g(j);
        gg += g(j) * g(j);
        hess(k, j) = 2.0 * (2.0 * g(k) * g(j) - a(k, j));
      }
      hess(k, k) = 2.0 * gg;
    }
    if (grad.norm() <= 1e-11 * std::max(1.0, g.squaredNorm())) break;
    Eigen::Index k = 0;
    const double big = g.cwiseAbs().maxCoeff(&k);
    double rest = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != k) rest = std::max(rest, std::abs(g(j)));
    if (big > 100.0 * scale && big > 30.0 * rest && loss >= star(k)) break;
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      Eigen::MatrixXd h = hess;
      const double floor = 1e-12 * std::max(1e-300, hess.diagonal().maxCoeff());
      for (Eigen::Index k = 0; k < m; ++k) h(k, k) += mu * std::max(hess(k, k), floor);
      const Eigen::VectorXd step = h.ldlt().solve(-grad);
      const Eigen::VectorXd trial = g + step;
      const double next = offdiag_loss(a, trial);
      if (next <= loss) {
        if (loss - next <= 1e-16 * loss) {
          g = trial;
          loss = next;
          break;
        }
        g = trial;
        loss = next;
        // Extrapolate while it keeps paying off; runaway starts then move
        // geometrically instead of crawling.
        Eigen::VectorXd stride = step;
        for (int grow = 0; grow < 20; ++grow) {
          stride *= 2.0;
          const Eigen::VectorXd further = g + stride;
          const double v = offdiag_loss(a, further);
          if (!(v < loss)) break;
          g = further;
          loss = v;
        }
        mu = std::max(mu * 0.1, 1e-12);
        improved = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!improved || g.cwiseAbs().maxCoeff() > blowup) break;
  }
  return loss;
}

}  // namespace

OffDiagFit fit_offdiag_rank_one(const Eigen::MatrixXd& a_in, int random_starts) {
  if (a_in.rows() != a_in.cols() || a_in.rows() < 2) {
    throw std::invalid_argument("fit_offdiag_rank_one: need a square matrix with m >= 2");
  }
  const Eigen::Index m = a_in.rows();
  Eigen::MatrixXd a = 0.5 * (a_in + a_in.transpose());
  a.diagonal().setZero();

  OffDiagFit best;
  best.value = 0.5 * a.squaredNorm();  // g = 0
  best.fitted = Eigen::MatrixXd::Zero(m, m);

  // Closure points: limits with one diverging loading keep a single row
  // ("star" pattern) and send every other product to zero.
  Eigen::VectorXd star(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        if (i != k && j != k) v += a(i, j) * a(i, j);
    star(k) = v;
    if (v < best.value) {
      best.value = v;
      best.fitted = Eigen::MatrixXd::Zero(m, m);
      best.fitted.row(k) = a.row(k);
      best.fitted.col(k) = a.col(k);
      best.at_infinity = true;
    }
  }
  if (best.value == 0.0) return best;

  auto consider = [&](Eigen::VectorXd g) {
    const double v = coordinate_descent(a, g, star);
    if (v < best.value) {
      best.value = v;
      best.fitted = g * g.transpose();
      best.fitted.diagonal().setZero();
      best.at_infinity = false;
    }
  };

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const double top = es.eigenvalues()(m - 1);
  const double scale = std::sqrt(std::max(a.cwiseAbs().maxCoeff(), 1e-300));
  if (top > 0.0) {
    consider(std::sqrt(top) * es.eigenvectors().col(m - 1));
  } else {
    consider(scale * es.eigenvectors().col(m - 1));
  }
  // Near-star starts: g_k large, g_j = a_kj / g_k.
  for (Eigen::Index k = 0; k < m; ++k) {
    const double big = 10.0 * scale;
    Eigen::VectorXd g = a.col(k) / big;
    g(k) = big;
    consider(g);
  }
  for (int s = 0; s < random_starts; ++s) {
    Stream stream(0x6a09e667f3bcc908ULL, static_cast<std::uint64_t>(s));
    consider(scale * stream.normal_vector(m));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

ConeProjection project(const Eigen::VectorXd& z, const ConeDescriptor& cone);

ConeProjection project_span(const Eigen::VectorXd& z, const LinearSpan& c) {
  Eigen::VectorXd p = c.orthonormal * (c.orthonormal.transpose() * z);
  return {(z - p).squaredNorm(), std::move(p)};
}

ConeProjection project_ray(const Eigen::VectorXd& z, const Ray& c) {
  const double t = c.direction.dot(z);
  if (t <= 0.0) return {z.squaredNorm(), Eigen::VectorXd::Zero(z.size())};
  Eigen::VectorXd p = t * c.direction;
  return {(z - p).squaredNorm(), std::move(p)};
}

ConeProjection project_union(const Eigen::VectorXd& z, const UnionOf& c) {
  ConeProjection best{std::numeric_limits<double>::infinity(), {}};
  for (const auto& member : c.members) {
    ConeProjection p = project(z, member);
    if (p.dist2 < best.dist2) best = std::move(p);
  }
  return best;
}

ConeProjection project_two_lines(const Eigen::VectorXd& z, const TwoLines& c) {
  const Eigen::Vector2d n1(1.0, 0.0);
  const Eigen::Vector2d n2(c.rho, std::sqrt(std::max(0.0, 1.0 - c.rho * c.rho)));
  const double d1 = n1.dot(z), d2 = n2.dot(z);
  const Eigen::Vector2d& n = d1 * d1 <= d2 * d2 ? n1 : n2;
  const double d = n.dot(z);
  return {d * d, z - d * n};
}

// Entries outside rows {i, j} must vanish off the diagonal; diagonal and
// (i, j) are free.  The block is replaced by `block_fit`.
ConeProjection assemble_factor_point(const Eigen::VectorXd& z, int m, int i, int j, const std::vector<int>& rest,
                                     const Eigen::MatrixXd& block_fit) {
  Eigen::VectorXd p = z;
  for (std::size_t a = 0; a < rest.size(); ++a)
    for (std::size_t b = a + 1; b < rest.size(); ++b) p(vech_index_sym(rest[a], rest[b], m)) = 0.0;
  for (std::size_t c = 0; c < rest.size(); ++c) {
    p(vech_index_sym(i, rest[c], m)) = block_fit(0, static_cast<Eigen::Index>(c));
    p(vech_index_sym(j, rest[c], m)) = block_fit(1, static_cast<Eigen::Index>(c));
  }
  return {(z - p).squaredNorm(), std::move(p)};
}

ConeProjection project_alg(const Eigen::VectorXd& z, const FactorAlgCone& c) {
  const auto rest = complement(c.m, c.i, c.j);
  const Eigen::MatrixXd block = extract_block(z, c.m, c.i, c.j, rest);
  const Sym2 p = gram(block);
  return assemble_factor_point(z, c.m, c.i, c.j, rest, rank_one_along(block, p.top_angle()));
}

ConeProjection project_tan(const Eigen::VectorXd& z, const FactorTanCone& c) {
  const auto rest = complement(c.m, c.i, c.j);
  Eigen::MatrixXd block = extract_block(z, c.m, c.i, c.j, rest);
  if (c.negative) block.row(1) *= -1.0;
  Eigen::MatrixXd fit = project_tan_cone_block(block, c.eta_low);
  if (c.negative) fit.row(1) *= -1.0;
  return assemble_factor_point(z, c.m, c.i, c.j, rest, fit);
}

ConeProjection project_diag(const Eigen::VectorXd& z, const FactorDiagCone& c) {
  const Eigen::MatrixXd a = VechVector(c.m, z).to_matrix();
  const OffDiagFit fit = fit_offdiag_rank_one(a, c.random_starts);
  Eigen::MatrixXd point = fit.fitted;
  point.diagonal() = a.diagonal();
  Eigen::VectorXd p = VechVector::from_matrix(point).entries;
  return {(z - p).squaredNorm(), std::move(p)};
}

ConeProjection project(const Eigen::VectorXd& z, const ConeDescriptor& cone) {
  struct Visitor {
    const Eigen::VectorXd& z;
    ConeProjection operator()(const LinearSpan& c) const { return project_span(z, c); }
    ConeProjection operator()(const UnionOf& c) const { return project_union(z, c); }
    ConeProjection operator()(const Ray& c) const { return project_ray(z, c); }
    ConeProjection operator()(const FactorDiagCone& c) const { return project_diag(z, c); }
    ConeProjection operator()(const FactorAlgCone& c) const { return project_alg(z, c); }
    ConeProjection operator()(const FactorTanCone& c) const { return project_tan(z, c); }
    ConeProjection operator()(const TwoLines& c) const { return project_two_lines(z, c); }
  };
  return std::visit(Visitor{z}, cone.kind);
}

}  // namespace

ConeProjection dist2_cone(const Eigen::VectorXd& z, const ConeDescriptor& cone) {
  if (z.size() != ambient_dim(cone)) {
    throw std::invalid_argument("dist2_cone: vector has length " + std::to_string(z.size()) +
                                " but the cone lives in dimension " + std::to_string(ambient_dim(cone)));
  }
  return project(z, cone);
}

ConeProjection dist2_cone(const VechVector& z, const ConeDescriptor& cone) { return dist2_cone(z.entries, cone); }

// ---------------------------------------------------------------------------
// Plane curves

Eigen::Vector2d curve_point(PlaneCurve curve, double t) {
  switch (curve) {
    case PlaneCurve::Nodal:
      return {t * t - 1.0, t * (t * t - 1.0)};
    case PlaneCurve::Cuspidal:
      return {t * t, t * t * t};
  }
  throw std::invalid_argument("curve_point: unknown curve");
}

Eigen::Vector2d curve_derivative(PlaneCurve curve, double t) {
  switch (curve) {
    case PlaneCurve::Nodal:
      return {2.0 * t, 3.0 * t * t - 1.0};
    case PlaneCurve::Cuspidal:
      return {2.0 * t, 3.0 * t * t};
  }
  throw std::invalid_argument("curve_derivative: unknown curve");
}

CurveProjection project_curve(const Eigen::Vector2d& x, PlaneCurve curve) {
  if (!x.allFinite()) throw std::invalid_argument("project_curve: point is not finite");
  constexpr int kGrid = 4001;
  const double half = 10.0 + 2.0 * x.norm();
  const double step = 2.0 * half / (kGrid - 1);
  auto dist2 = [&](double t) { return (x - curve_point(curve, t)).squaredNorm(); };

  std::vector<double> values(kGrid);
  for (int k = 0; k < kGrid; ++k) values[static_cast<std::size_t>(k)] = dist2(-half + k * step);

  CurveProjection best{0.0, std::numeric_limits<double>::infinity()};
  for (int k = 0; k < kGrid; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const bool left_ok = k == 0 || values[uk] <= values[uk - 1];
    const bool right_ok = k == kGrid - 1 || values[uk] <= values[uk + 1];
    if (!(left_ok && right_ok)) continue;
    const double lo = -half + std::max(0, k - 1) * step;
    const double hi = -half + std::min(kGrid - 1, k + 1) * step;
    std::uintmax_t iters = 60;
    auto [t, v] = boost::math::tools::brent_find_minima(dist2, lo, hi, std::numeric_limits<double>::digits / 2, iters);
    // Newton on the stationarity condition; both curves have f'' = (2, 6t)
    for (int it = 0; it < 8; ++it) {
      const Eigen::Vector2d r = x - curve_point(curve, t);
      const Eigen::Vector2d d1 = curve_derivative(curve, t);
      const double h = d1.squaredNorm() - r.dot(Eigen::Vector2d(2.0, 6.0 * t));
      if (h <= 0.0) break;
      const double next = t + r.dot(d1) / h;
      const double vn = dist2(next);
      if (!(vn < v)) break;
      t = next;
      v = vn;
    }
    if (v < best.dist2) best = {t, v};
    if (values[uk] < best.dist2) best = {-half + k * step, values[uk]};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Sampling

EmpiricalDist sample_cone_distance(const ConeDescriptor& cone, std::size_t reps, std::uint64_t seed, int threads) {
  if (reps == 0) throw std::invalid_argument("sample_cone_distance: reps must be >= 1");
  const int k = ambient_dim(cone);
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t r = first; r < last; ++r) {
      Stream stream(seed, r);
      out[r] = project(stream.normal_vector(k), cone).dist2;
    }
  });
  return EmpiricalDist(std::move(out));
}

EmpiricalDist sample_nested_limit(const ConeDescriptor& cone0, const ConeDescriptor& cone1, std::size_t reps,
                                  std::uint64_t seed, int threads) {
  if (reps == 0) throw std::invalid_argument("sample_nested_limit: reps must be >= 1");
  const int k = ambient_dim(cone0);
  if (ambient_dim(cone1) != k) throw std::invalid_argument("sample_nested_limit: cones live in different dimensions");
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t r = first; r < last; ++r) {
      Stream stream(seed, r);
      const Eigen::VectorXd z = stream.normal_vector(k);
      const double d = project(z, cone0).dist2 - project(z, cone1).dist2;
      if (d < -1e-9) {
        throw std::domain_error("sample_nested_limit: negative difference " + std::to_string(d) +
                                "; the null cone is not contained in the alternative cone");
      }
      out[r] = d;
    }
  });
  return EmpiricalDist(std::move(out));
}

}  // namespace conelrt
