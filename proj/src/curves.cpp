#include "conelrt/curves.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace conelrt {

double curve_parameter(PlaneCurve curve, const Eigen::Vector2d& mu0) {
  if (!mu0.allFinite()) throw std::invalid_argument("curve_parameter: mu0 is not finite");
  // Both curves satisfy mu2 = t mu1, so t is recovered away from mu1 = 0.
  double t = 0.0;
  if (mu0(0) != 0.0) {
    t = mu0(1) / mu0(0);
  } else if (curve == PlaneCurve::Nodal) {
    t = 1.0;
  }
  if ((curve_point(curve, t) - mu0).norm() > 1e-12 * (1.0 + mu0.norm())) {
    throw std::invalid_argument("curve_parameter: mu0 is not on the " + std::string(curve_name(curve)) + " curve");
  }
  return t;
}

double lrt_mean_curve(const Eigen::Vector2d& xbar, long n, PlaneCurve curve) {
  if (n < 1) throw std::invalid_argument("lrt_mean_curve: n must be >= 1");
  return static_cast<double>(n) * project_curve(xbar, curve).dist2;
}

ConeDescriptor tangent_cone_curve(PlaneCurve curve, const Eigen::Vector2d& mu0) {
  const double t = curve_parameter(curve, mu0);
  if (curve == PlaneCurve::Nodal && std::abs(t * t - 1.0) == 0.0) {
    return union_of({linear_span(Eigen::Vector2d(1.0, 1.0)), linear_span(Eigen::Vector2d(1.0, -1.0))});
  }
  if (curve == PlaneCurve::Cuspidal && t == 0.0) return ray(Eigen::Vector2d(1.0, 0.0));
  return linear_span(curve_derivative(curve, t));
}

const char* curve_name(PlaneCurve curve) { return curve == PlaneCurve::Nodal ? "nodal" : "cuspidal"; }

PlaneCurve parse_curve(const std::string& name) {
  if (name == "nodal") return PlaneCurve::Nodal;
  if (name == "cuspidal") return PlaneCurve::Cuspidal;
  throw std::invalid_argument("unknown curve '" + name + "' (expected nodal or cuspidal)");
}

}  // namespace conelrt
