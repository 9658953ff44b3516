#include "conelrt/symkit.hpp"

#include <cmath>
#include <string>

namespace conelrt {

int vech_index(int i, int j, int m) {
  if (m < 1 || i < 0 || j < i || j >= m) {
    throw std::out_of_range("vech_index: pair (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is not in the upper triangle of a " + std::to_string(m) + "x" +
                            std::to_string(m) + " matrix");
  }
  // rows 0..i-1 contribute m, m-1, ..., m-i+1 entries
  return i * m - i * (i - 1) / 2 + (j - i);
}

int vech_index_sym(int i, int j, int m) { return i <= j ? vech_index(i, j, m) : vech_index(j, i, m); }

int vech_dim(Eigen::Index length) {
  const int m = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(length) + 1.0) - 1.0) / 2.0));
  if (m < 1 || vech_size(m) != length) {
    throw std::invalid_argument("vech_dim: length " + std::to_string(length) +
                                " is not m(m+1)/2 for any m >= 1");
  }
  return m;
}

VechVector::VechVector(int dim, Eigen::VectorXd values) : m(dim), entries(std::move(values)) {
  if (dim < 1 || entries.size() != vech_size(dim)) {
    throw std::invalid_argument("VechVector: length must equal m(m+1)/2");
  }
}

VechVector VechVector::zeros(int dim) { return VechVector(dim, Eigen::VectorXd::Zero(vech_size(dim))); }

VechVector VechVector::from_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw std::invalid_argument("VechVector::from_matrix: matrix must be square and nonempty");
  }
  const int m = static_cast<int>(a.rows());
  Eigen::VectorXd v(vech_size(m));
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) v(k++) = a(i, j);
  return VechVector(m, std::move(v));
}

Eigen::MatrixXd VechVector::to_matrix() const {
  Eigen::MatrixXd a(m, m);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      a(i, j) = entries(k);
      a(j, i) = entries(k);
      ++k;
    }
  return a;
}

bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_positive_definite(const Eigen::MatrixXd& a, double eig_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > eig_tol;
}

CovMatrix::CovMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || !is_symmetric(values_)) {
    throw std::invalid_argument("CovMatrix: matrix is not square and symmetric");
  }
  values_ = 0.5 * (values_ + values_.transpose()).eval();
  if (!is_positive_definite(values_)) {
    throw std::invalid_argument("CovMatrix: matrix is not positive definite");
  }
}

CovMatrix::CovMatrix(Eigen::MatrixXd values, NoCheck) : values_(std::move(values)) {}

CovMatrix CovMatrix::unchecked(Eigen::MatrixXd values) {
  if (values.rows() != values.cols() || values.rows() < 1) {
    throw std::invalid_argument("CovMatrix: matrix must be square and nonempty");
  }
  Eigen::MatrixXd sym = 0.5 * (values + values.transpose());
  return CovMatrix(std::move(sym), NoCheck{});
}

Eigen::MatrixXd fisher_info_inverse(const CovMatrix& sigma) {
  const Eigen::MatrixXd& s = sigma.values();
  if (!is_positive_definite(s)) {
    throw std::invalid_argument("fisher_info_inverse: Sigma is not positive definite");
  }
  const int m = sigma.dim();
  const int k = vech_size(m);
  Eigen::MatrixXd out(k, k);
  int r = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j, ++r) {
      int c = 0;
      for (int p = 0; p < m; ++p)
        for (int q = p; q < m; ++q, ++c) out(r, c) = s(i, p) * s(j, q) + s(i, q) * s(j, p);
    }
  return out;
}

Eigen::MatrixXd fisher_info(const CovMatrix& sigma) {
  const Eigen::MatrixXd inv = fisher_info_inverse(sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inv);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e12) {
    throw std::domain_error("fisher_info: inverse Fisher information is ill-conditioned");
  }
  Eigen::MatrixXd out = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd mat_sqrt(const Eigen::MatrixXd& a) {
  if (!is_symmetric(a, 1e-10)) {
    throw std::invalid_argument("mat_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10) throw std::domain_error("mat_sqrt: matrix has a negative eigenvalue");
    ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double mahalanobis_sq(const Eigen::VectorXd& z, const Eigen::VectorXd& tau, const Eigen::MatrixXd& info) {
  if (z.size() != tau.size() || info.rows() != z.size() || info.cols() != z.size()) {
    throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
  }
  const Eigen::VectorXd d = z - tau;
  return std::max(0.0, d.dot(info * d));
}

double mahalanobis_sq(const VechVector& z, const VechVector& tau, const Eigen::MatrixXd& info) {
  if (z.m != tau.m) throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
  return mahalanobis_sq(z.entries, tau.entries, info);
}

}  // namespace conelrt
