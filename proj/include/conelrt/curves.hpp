#ifndef CONELRT_CURVES_HPP
#define CONELRT_CURVES_HPP

#include "conelrt/cones.hpp"

#include <Eigen/Dense>

#include <string>

namespace conelrt {

/// Mean of N2(mu, I) restricted to a parameterized plane curve.
struct CurveModel {
  PlaneCurve curve = PlaneCurve::Nodal;
  Eigen::Vector2d mu0 = Eigen::Vector2d::Zero();
};

/// Parameter t with f(t) = mu0.  Throws std::invalid_argument if mu0 is
/// farther than 1e-12 (relative) from the curve.  At the node both t = 1
/// and t = -1 qualify; 1 is returned.
double curve_parameter(PlaneCurve curve, const Eigen::Vector2d& mu0);

/// n times the squared distance from the sample mean to the curve.
double lrt_mean_curve(const Eigen::Vector2d& xbar, long n, PlaneCurve curve);

/// Tangent cone at mu0: two lines at the node, the ray mu1 >= 0 at the
/// cusp, the tangent line elsewhere.
ConeDescriptor tangent_cone_curve(PlaneCurve curve, const Eigen::Vector2d& mu0);

const char* curve_name(PlaneCurve curve);
PlaneCurve parse_curve(const std::string& name);

}  // namespace conelrt

#endif  // CONELRT_CURVES_HPP
