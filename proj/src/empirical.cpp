#include "conelrt/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelrt {

EmpiricalDist::EmpiricalDist(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw std::invalid_argument("EmpiricalDist: empty sample");
  if (std::any_of(sorted_.begin(), sorted_.end(), [](double x) { return std::isnan(x); })) {
    throw std::invalid_argument("EmpiricalDist: sample contains NaN");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDist::ecdf(double t) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDist::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  const double n = static_cast<double>(sorted_.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, sorted_.size());
  return sorted_[rank - 1];
}

double EmpiricalDist::mean() const {
  double s = 0.0;
  for (double x : sorted_) s += x;
  return s / static_cast<double>(sorted_.size());
}

double EmpiricalDist::variance() const {
  if (sorted_.size() < 2) return 0.0;
  const double mu = mean();
  double s = 0.0;
  for (double x : sorted_) s += (x - mu) * (x - mu);
  return s / static_cast<double>(sorted_.size() - 1);
}

double ecdf_eval(const EmpiricalDist& d, double t) { return d.ecdf(t); }
double quantile(const EmpiricalDist& d, double p) { return d.quantile(p); }

double ks_two_sample(const EmpiricalDist& a, const EmpiricalDist& b) {
  const auto& x = a.sorted();
  const auto& y = b.sorted();
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_one_sample(const EmpiricalDist& d, const std::function<double(double)>& cdf) {
  const auto& x = d.sorted();
  const double n = static_cast<double>(x.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // skip to the last copy of a tied value so the upper step is exact
    if (i + 1 < x.size() && x[i + 1] == x[i]) continue;
    const double f = cdf(x[i]);
    std::size_t first = i;
    while (first > 0 && x[first - 1] == x[i]) --first;
    stat = std::max(stat, std::abs(static_cast<double>(i + 1) / n - f));
    stat = std::max(stat, std::abs(f - static_cast<double>(first) / n));
  }
  return stat;
}

double ks_uniform(std::span<const double> pvals) {
  std::vector<double> v(pvals.begin(), pvals.end());
  for (double p : v) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("ks_uniform: p-value outside [0, 1]");
  }
  EmpiricalDist d(std::move(v));
  return ks_one_sample(d, [](double t) { return std::clamp(t, 0.0, 1.0); });
}

double ks_critical(double alpha, std::size_t n1, std::size_t n2) {
  if (!(alpha > 0.0 && alpha < 1.0) || n1 == 0) throw std::invalid_argument("ks_critical: bad arguments");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double a = static_cast<double>(n1);
  if (n2 == 0) return c / std::sqrt(a);
  const double b = static_cast<double>(n2);
  return c * std::sqrt((a + b) / (a * b));
}

}  // namespace conelrt
