#include "conelrt/optim.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

namespace conelrt {

namespace {

void disable_gsl_abort() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

Eigen::Map<const Eigen::VectorXd> view(const gsl_vector* v) {
  // GSL vectors from gsl_vector_alloc have unit stride.
  return {v->data, static_cast<Eigen::Index>(v->size)};
}

struct Callback {
  const Objective* fn;
  Eigen::VectorXd scratch;
};

double eval_f(const gsl_vector* x, void* params) {
  auto* cb = static_cast<Callback*>(params);
  const double f = (*cb->fn)(view(x), nullptr);
  return std::isfinite(f) ? f : GSL_POSINF;
}

void eval_df(const gsl_vector* x, void* params, gsl_vector* g) {
  auto* cb = static_cast<Callback*>(params);
  cb->scratch.resize(static_cast<Eigen::Index>(x->size));
  (*cb->fn)(view(x), &cb->scratch);
  for (std::size_t i = 0; i < x->size; ++i) gsl_vector_set(g, i, cb->scratch(static_cast<Eigen::Index>(i)));
}

void eval_fdf(const gsl_vector* x, void* params, double* f, gsl_vector* g) {
  auto* cb = static_cast<Callback*>(params);
  cb->scratch.resize(static_cast<Eigen::Index>(x->size));
  const double v = (*cb->fn)(view(x), &cb->scratch);
  *f = std::isfinite(v) ? v : GSL_POSINF;
  for (std::size_t i = 0; i < x->size; ++i) gsl_vector_set(g, i, cb->scratch(static_cast<Eigen::Index>(i)));
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fdfminimizer* s) const { gsl_multimin_fdfminimizer_free(s); }
};

}  // namespace

MinimizeResult minimize_bfgs(const Objective& fn, const Eigen::VectorXd& x0, const MinimizeOptions& opts) {
  disable_gsl_abort();
  const auto n = static_cast<std::size_t>(x0.size());
  MinimizeResult best;
  best.x = x0;
  Eigen::VectorXd g0(x0.size());
  best.value = fn(x0, &g0);
  best.grad_norm = g0.norm();
  if (!std::isfinite(best.value)) {
    best.value = std::numeric_limits<double>::infinity();
    return best;
  }
  if (n == 0 || best.grad_norm < opts.grad_tol) {
    best.converged = true;
    return best;
  }

  Callback cb{&fn, Eigen::VectorXd(x0.size())};
  gsl_multimin_function_fdf func;
  func.n = n;
  func.f = &eval_f;
  func.df = &eval_df;
  func.fdf = &eval_fdf;
  func.params = &cb;

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0(static_cast<Eigen::Index>(i)));
  std::unique_ptr<gsl_multimin_fdfminimizer, MinimizerDeleter> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n));
  gsl_multimin_fdfminimizer_set(s.get(), &func, x.get(), opts.initial_step, opts.line_tol);

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    if (gsl_multimin_fdfminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_gradient(s->gradient, opts.grad_tol) == GSL_SUCCESS) {
      ++iter;
      break;
    }
  }
  const double f = s->f;
  if (std::isfinite(f) && f <= best.value) {
    best.x = view(s->x);
    best.value = f;
    best.grad_norm = gsl_blas_dnrm2(s->gradient);
  }
  best.iterations = iter;
  best.converged = best.grad_norm < opts.grad_tol;
  return best;
}

}  // namespace conelrt
