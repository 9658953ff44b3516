#ifndef CONELRT_CONES_HPP
#define CONELRT_CONES_HPP

#include "conelrt/empirical.hpp"
#include "conelrt/symkit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

namespace conelrt {

// Cone descriptors.  Every descriptor denotes a closed cone in some
// ambient R^k; the factor-analysis cones live in vech coordinates of
// m x m symmetric matrices.  Pair indices (i, j) are 0-based.

/// Column span of `basis`; the orthonormal basis is computed once.
struct LinearSpan {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd orthonormal;
};

/// Closed half-line {t * direction : t >= 0}.
struct Ray {
  Eigen::VectorXd direction;
};

/// Closure of {D + g g' : D diagonal, g in R^m}.  The off-diagonal fit is
/// solved by multi-start coordinate descent; `random_starts` is the number
/// of random initial loadings tried in addition to the rank-one start.
struct FactorDiagCone {
  int m = 0;
  int random_starts = 20;
};

/// Symmetric S whose off-diagonal entries outside rows {i, j} vanish and
/// whose {i, j} x rest block has rank <= 1.
struct FactorAlgCone {
  int m = 0;
  int i = 0;
  int j = 1;
};

/// FactorAlgCone restricted to blocks with row_j = eta * row_i for some
/// eta in [eta_low, inf], including the eta -> inf limit (row_i = 0).  With
/// `negative` set the multiplier range is [-inf, -eta_low] instead.
struct FactorTanCone {
  int m = 0;
  int i = 0;
  int j = 1;
  double eta_low = 0.0;
  bool negative = false;
};

/// Union of the two lines in R^2 whose unit normals (1, 0) and
/// (rho, sqrt(1 - rho^2)) have inner product rho.
struct TwoLines {
  double rho = 0.0;
};

struct ConeDescriptor;

struct UnionOf {
  std::vector<ConeDescriptor> members;
};

struct ConeDescriptor {
  using Kind = std::variant<LinearSpan, UnionOf, Ray, FactorDiagCone, FactorAlgCone, FactorTanCone, TwoLines>;
  Kind kind;
};

// Factories validate the descriptor invariants and throw
// std::invalid_argument on violation.
ConeDescriptor linear_span(const Eigen::MatrixXd& basis);
/// The cone {0} in R^k.
ConeDescriptor origin_cone(int k);
ConeDescriptor ray(const Eigen::VectorXd& direction);
ConeDescriptor union_of(std::vector<ConeDescriptor> members);
ConeDescriptor factor_diag_cone(int m, int random_starts = 20);
ConeDescriptor factor_alg_cone(int m, int i, int j);
ConeDescriptor factor_tan_cone(int m, int i, int j, double eta_low, bool negative = false);
ConeDescriptor two_lines(double rho);

int ambient_dim(const ConeDescriptor& cone);

struct ConeProjection {
  double dist2 = 0.0;
  Eigen::VectorXd point;
};

/// Squared Euclidean distance from z to the cone and a nearest point.
/// Throws std::invalid_argument on dimension mismatch.
ConeProjection dist2_cone(const Eigen::VectorXd& z, const ConeDescriptor& cone);
ConeProjection dist2_cone(const VechVector& z, const ConeDescriptor& cone);

/// Squared distance from the 2 x c matrix `block` to the rank-one matrices
/// u v' with u on the arc from (1, eta_low)/|.| to (0, 1).
double dist2_tan_cone_block(const Eigen::MatrixXd& block, double eta_low);

/// Nearest rank-one matrix for dist2_tan_cone_block.
Eigen::MatrixXd project_tan_cone_block(const Eigen::MatrixXd& block, double eta_low);

/// Off-diagonal rank-one fit used by FactorDiagCone: the infimum over g of
/// sum_{i<j} (a_ij - g_i g_j)^2 for the symmetric matrix `a` (diagonal
/// ignored), together with the off-diagonal pattern attaining it.
struct OffDiagFit {
  double value = 0.0;
  Eigen::MatrixXd fitted;  // symmetric, zero diagonal
  bool at_infinity = false;  // attained only in the closure (star pattern)
};
OffDiagFit fit_offdiag_rank_one(const Eigen::MatrixXd& a, int random_starts = 20);

enum class PlaneCurve { Nodal, Cuspidal };

Eigen::Vector2d curve_point(PlaneCurve curve, double t);
Eigen::Vector2d curve_derivative(PlaneCurve curve, double t);

struct CurveProjection {
  double t = 0.0;
  double dist2 = 0.0;
};

/// Global minimum over t of |x - f(t)|^2 for the parameterized curve.
CurveProjection project_curve(const Eigen::Vector2d& x, PlaneCurve curve);

/// reps draws of dist2_cone(Z, cone) with Z standard normal in the ambient
/// dimension; draw r uses Stream(seed, r).
EmpiricalDist sample_cone_distance(const ConeDescriptor& cone, std::size_t reps, std::uint64_t seed,
                                   int threads = 0);

/// Draws of dist2(Z, cone0) - dist2(Z, cone1) for nested cones
/// cone0 in cone1.  Throws std::domain_error if a difference falls below
/// -1e-9, which means cone0 is not contained in cone1.
EmpiricalDist sample_nested_limit(const ConeDescriptor& cone0, const ConeDescriptor& cone1, std::size_t reps,
                                  std::uint64_t seed, int threads = 0);

}  // namespace conelrt

#endif  // CONELRT_CONES_HPP
