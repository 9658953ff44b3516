#ifndef CONELRT_SYMKIT_HPP
#define CONELRT_SYMKIT_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace conelrt {

/// Symmetric-matrix coordinates and the Gaussian covariance geometry.
///
/// A symmetric m x m matrix is identified with a vector of length
/// m(m+1)/2 indexed by pairs (i, j), i <= j, in lexicographic order
/// (11, 12, ..., 1m, 22, ..., mm).  All indices in this API are 0-based.

constexpr int vech_size(int m) { return m * (m + 1) / 2; }

/// Position of the pair (i, j), 0 <= i <= j < m, in a vech vector.
/// Throws std::out_of_range if the pair is not in the upper triangle.
int vech_index(int i, int j, int m);

/// Same as vech_index but accepts the pair in either order.
int vech_index_sym(int i, int j, int m);

/// Recover the dimension m from a vech length; throws if the length is
/// not a triangular number.
int vech_dim(Eigen::Index length);

struct VechVector {
  int m = 0;
  Eigen::VectorXd entries;

  VechVector() = default;
  VechVector(int dim, Eigen::VectorXd values);

  static VechVector zeros(int dim);
  static VechVector from_matrix(const Eigen::MatrixXd& a);

  Eigen::MatrixXd to_matrix() const;

  double operator()(int i, int j) const { return entries(vech_index_sym(i, j, m)); }
  double& operator()(int i, int j) { return entries(vech_index_sym(i, j, m)); }
  Eigen::Index size() const { return entries.size(); }
};

/// Symmetric positive definite covariance matrix.  Construction checks
/// symmetry (relative 1e-12) and positive definiteness (smallest
/// eigenvalue > 1e-10) and throws std::invalid_argument otherwise.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd values);

  /// Wraps a symmetric matrix without the definiteness check.
  static CovMatrix unchecked(Eigen::MatrixXd values);

  int dim() const { return static_cast<int>(values_.rows()); }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }

 private:
  struct NoCheck {};
  CovMatrix(Eigen::MatrixXd values, NoCheck);
  Eigen::MatrixXd values_;
};

constexpr double kSymmetryTol = 1e-12;
constexpr double kPdEigenTol = 1e-10;

bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol = kSymmetryTol);
bool is_positive_definite(const Eigen::MatrixXd& a, double eig_tol = kPdEigenTol);

/// Inverse Fisher information of N(0, Sigma) in vech coordinates:
/// entry (ij, kl) = s_ik s_jl + s_il s_jk.
Eigen::MatrixXd fisher_info_inverse(const CovMatrix& sigma);

/// Fisher information (numeric inverse of fisher_info_inverse).  Throws
/// std::domain_error when the condition number exceeds 1e12.
Eigen::MatrixXd fisher_info(const CovMatrix& sigma);

/// Spectral square root of a symmetric PSD matrix.  Eigenvalues in
/// (-1e-10, 0) are treated as zero; anything more negative throws
/// std::domain_error.
Eigen::MatrixXd mat_sqrt(const Eigen::MatrixXd& a);

/// (z - tau)' info (z - tau).
double mahalanobis_sq(const VechVector& z, const VechVector& tau, const Eigen::MatrixXd& info);
double mahalanobis_sq(const Eigen::VectorXd& z, const Eigen::VectorXd& tau,
                      const Eigen::MatrixXd& info);

}  // namespace conelrt

#endif  // CONELRT_SYMKIT_HPP
