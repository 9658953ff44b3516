#ifndef CONELRT_FEEDBACK_HPP
#define CONELRT_FEEDBACK_HPP

#include "conelrt/suffstat.hpp"
#include "conelrt/symkit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>

namespace conelrt {

/// Four-variable structural equation model with the feedback loop
/// 2 -> 3 -> 4 -> 2:
///   Y1 = e1, Y2 = b21 Y1 + b24 Y4 + e2, Y3 = b31 Y1 + b32 Y2 + e3,
///   Y4 = b43 Y3 + e4, e_i ~ N(0, omega_i).
struct FeedbackBeta {
  double b21 = 0.0;
  double b24 = 0.0;
  double b31 = 0.0;
  double b32 = 0.0;
  double b43 = 0.0;

  Eigen::Matrix<double, 5, 1> vec() const { return {b21, b24, b31, b32, b43}; }
  static FeedbackBeta from_vec(const Eigen::Matrix<double, 5, 1>& v) { return {v(0), v(1), v(2), v(3), v(4)}; }
  double det_b() const { return 1.0 - b32 * b24 * b43; }
};

struct FeedbackParams {
  FeedbackBeta beta;
  Eigen::Vector4d omega = Eigen::Vector4d::Ones();

  Eigen::Vector4d kappa() const { return omega.cwiseInverse(); }
};

/// B with B Y = e.
Eigen::Matrix4d b_matrix(const FeedbackBeta& beta);

/// B^-1 diag(omega) B^-T.  Throws std::invalid_argument if B is singular
/// (|det B| < 1e-12) or omega is not positive.
CovMatrix f_cov(const FeedbackParams& p);

/// The precision matrix B' diag(kappa) B written out entrywise.
Eigen::Matrix4d g_precision(const FeedbackBeta& beta, const Eigen::Vector4d& kappa);

struct Partner {
  FeedbackBeta beta;
  Eigen::Vector4d kappa;
  bool coincides = false;  // the partner equals the input (within 1e-12)
};

/// Second preimage of g(beta, kappa) on the singular locus
/// b31 + b32 b21 = 0 with b32 b43 b24 != -1 and b32, b43, b24 != 0.
/// Throws std::invalid_argument when these conditions fail (tolerance tol)
/// or a denominator vanishes.
Partner preimage_partner(const FeedbackBeta& beta, const Eigen::Vector4d& kappa, double tol = 1e-9);

struct Global {};
struct LocalTwo {};
struct GlobalZeroBranch {};
struct GlobalDetBranch {};
using IdentClass = std::variant<Global, LocalTwo, GlobalZeroBranch, GlobalDetBranch>;

/// Identifiability class; the defining polynomials are compared with zero
/// at absolute tolerance tol.
IdentClass ident_class(const FeedbackBeta& beta, double tol = 1e-12);
const char* ident_class_name(const IdentClass& c);

struct SingularNormals {
  VechVector eta;
  VechVector eta_bar;
};

/// Normals of the two hyperplanes forming the tangent cone at a singular
/// point; nonzero only at the (0,2) and (0,3) coordinates.  Pure formula
/// evaluation (det B is not checked).  Throws std::invalid_argument if
/// |b31 + b32 b21| > tol.
SingularNormals singular_normals(const FeedbackParams& p, double tol = 1e-9);

/// Cosine between the two hyperplane normals in the Fisher metric.
double cone_angle_rho(const FeedbackParams& p, double tol = 1e-9);

/// The implicit equation of the model's Zariski closure evaluated at sigma;
/// zero on the model.  Diagnostic only.
double hypersurface_residual(const Eigen::Matrix4d& sigma);

struct FeedbackMleOptions {
  int random_starts = 30;
  std::uint64_t seed = 0x13198a2e03707344ULL;
  double grad_tol = 1e-8;
  int max_iter = 400;
};

struct FeedbackFit {
  FeedbackParams params;
  double discrepancy = 0.0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Maximum likelihood with the error precisions profiled out: for fixed
/// beta the optimal kappa_i is 1 / (B S B')_ii, leaving a smooth problem in
/// the five coefficients.  lambda = n * discrepancy.
FeedbackFit mle_feedback(const SuffStat& d, const FeedbackMleOptions& opts = {});

}  // namespace conelrt

#endif  // CONELRT_FEEDBACK_HPP
