#ifndef CONELRT_EMPIRICAL_HPP
#define CONELRT_EMPIRICAL_HPP

#include <functional>
#include <span>
#include <vector>

namespace conelrt {

/// Sorted sample with ECDF and quantile queries.
class EmpiricalDist {
 public:
  /// Sorts the sample.  Throws std::invalid_argument if it is empty or
  /// contains NaN.
  explicit EmpiricalDist(std::vector<double> sample);

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

  /// Right-continuous ECDF: fraction of the sample <= t.
  double ecdf(double t) const;
  /// Fraction of the sample > t.
  double survival(double t) const { return 1.0 - ecdf(t); }
  /// Inverse ECDF: smallest sample value x with ecdf(x) >= p.
  double quantile(double p) const;

  double mean() const;
  double variance() const;

 private:
  std::vector<double> sorted_;
};

double ecdf_eval(const EmpiricalDist& d, double t);
double quantile(const EmpiricalDist& d, double p);

/// Two-sample Kolmogorov-Smirnov statistic sup_t |F_a(t) - F_b(t)|.
double ks_two_sample(const EmpiricalDist& a, const EmpiricalDist& b);

/// One-sample KS statistic against a continuous CDF.
double ks_one_sample(const EmpiricalDist& d, const std::function<double(double)>& cdf);

/// KS statistic of p-values against Uniform(0, 1).
double ks_uniform(std::span<const double> pvals);

/// Asymptotic KS critical value at level alpha for sample sizes n1 and
/// n2; pass n2 = 0 for the one-sample test.
double ks_critical(double alpha, std::size_t n1, std::size_t n2 = 0);

}  // namespace conelrt

#endif  // CONELRT_EMPIRICAL_HPP
