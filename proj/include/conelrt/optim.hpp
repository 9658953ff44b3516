#ifndef CONELRT_OPTIM_HPP
#define CONELRT_OPTIM_HPP

#include <Eigen/Dense>

#include <functional>

namespace conelrt {

/// Objective with optional gradient output.  The gradient pointer is null
/// when only the value is needed.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeOptions {
  double grad_tol = 1e-7;
  int max_iter = 1000;
  double initial_step = 0.1;
  double line_tol = 0.1;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained quasi-Newton minimization (GSL vector_bfgs2).
MinimizeResult minimize_bfgs(const Objective& fn, const Eigen::VectorXd& x0,
                             const MinimizeOptions& opts = {});

}  // namespace conelrt

#endif  // CONELRT_OPTIM_HPP
