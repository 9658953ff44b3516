#include "conelrt/curves.hpp"
#include "conelrt/factor.hpp"
#include "conelrt/feedback.hpp"
#include "conelrt/harness.hpp"
#include "conelrt/laws.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace conelrt;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ConeDescriptor parse_cone(const std::string& text) {
  const std::string full = text.rfind("cone:", 0) == 0 ? text : "cone:" + text;
  const LimitLaw law = parse_law(full);
  return std::get<ConeDistance>(law).cone;
}

FeedbackParams feedback_params(const Eigen::VectorXd& beta, const Eigen::VectorXd& omega) {
  if (beta.size() != 5) throw std::invalid_argument("beta must have 5 entries (b21, b24, b31, b32, b43)");
  if (omega.size() != 4) throw std::invalid_argument("omega must have 4 entries");
  return {FeedbackBeta::from_vec(beta), omega};
}

py::dict factor_fit_dict(const FactorFit& f) {
  py::dict d;
  d["gamma"] = f.params.gamma;
  d["delta"] = f.params.delta;
  d["sigma"] = f.sigma;
  d["discrepancy"] = f.discrepancy;
  d["loglik"] = f.loglik;
  d["heywood"] = f.heywood;
  d["converged"] = f.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_conelrt, m) {
  m.doc() = "Likelihood ratio tests at singular points: limit laws, cone projections and Monte Carlo runs";

  m.def(
      "sample_law",
      [](const std::string& law, std::size_t reps, std::uint64_t seed, int threads) {
        const LimitLaw parsed = parse_law(law);
        validate_law(parsed);
        std::vector<double> draws;
        {
          py::gil_scoped_release release;
          draws = sample_many(parsed, reps, seed, threads).sorted();
        }
        return to_array(draws);
      },
      py::arg("law"), py::arg("reps"), py::arg("seed"), py::arg("threads") = 0,
      "Sorted draws from a limit law given in text form, e.g. 'maxeig:4'.");

  m.def(
      "law_cdf",
      [](const std::string& law, double t) { return law_cdf(parse_law(law), t); }, py::arg("law"), py::arg("t"),
      "Closed-form CDF where available, else None.");

  m.def(
      "quantile",
      [](const std::string& law, double p, std::size_t reps, std::uint64_t seed, int threads) {
        const CriticalValue c = estimate_critical(parse_law(law), p, reps, seed, threads);
        return py::dict(py::arg("value") = c.value, py::arg("stderr") = c.stderr_, py::arg("lower") = c.lower,
                        py::arg("upper") = c.upper);
      },
      py::arg("law"), py::arg("p"), py::arg("reps") = 100000, py::arg("seed") = 0, py::arg("threads") = 0);

  m.def(
      "dist2_cone",
      [](const Eigen::VectorXd& z, const std::string& cone) {
        const ConeProjection p = dist2_cone(z, parse_cone(cone));
        return py::make_tuple(p.dist2, p.point);
      },
      py::arg("z"), py::arg("cone"), "Squared distance to a cone such as 'diag:4' and the nearest point.");

  m.def("chisq_sf", &chisq_sf, py::arg("df"), py::arg("t"));

  m.def(
      "fit_one_factor", [](const Eigen::MatrixXd& s, long n) { return factor_fit_dict(mle_one_factor(SuffStat(s, n))); },
      py::arg("S"), py::arg("n"));
  m.def(
      "lrt_saturated", [](const Eigen::MatrixXd& s, long n) { return lrt_saturated(SuffStat(s, n)); }, py::arg("S"),
      py::arg("n"));
  m.def(
      "lrt_submodel", [](const Eigen::MatrixXd& s, long n, int k) { return lrt_submodel(SuffStat(s, n), k); },
      py::arg("S"), py::arg("n"), py::arg("k"), "k is 1-based.");
  m.def("tetrads", &tetrads, py::arg("sigma"));
  m.def("pentad", &pentad, py::arg("sigma"));

  m.def(
      "feedback_cov",
      [](const Eigen::VectorXd& beta, const Eigen::VectorXd& omega) {
        return Eigen::MatrixXd(f_cov(feedback_params(beta, omega)).values());
      },
      py::arg("beta"), py::arg("omega") = Eigen::VectorXd::Ones(4));
  m.def(
      "cone_angle_rho",
      [](const Eigen::VectorXd& beta, const Eigen::VectorXd& omega) {
        return cone_angle_rho(feedback_params(beta, omega));
      },
      py::arg("beta"), py::arg("omega") = Eigen::VectorXd::Ones(4));
  m.def(
      "ident_class", [](const Eigen::VectorXd& beta) {
        return std::string(ident_class_name(ident_class(feedback_params(beta, Eigen::VectorXd::Ones(4)).beta)));
      },
      py::arg("beta"));
  m.def(
      "fit_feedback",
      [](const Eigen::MatrixXd& s, long n) {
        const FeedbackFit f = mle_feedback(SuffStat(s, n));
        py::dict d;
        d["beta"] = Eigen::VectorXd(f.params.beta.vec());
        d["omega"] = Eigen::VectorXd(f.params.omega);
        d["discrepancy"] = f.discrepancy;
        d["lambda"] = f.lambda;
        d["converged"] = f.converged;
        return d;
      },
      py::arg("S"), py::arg("n"));

  m.def(
      "lrt_mean_curve",
      [](const Eigen::Vector2d& xbar, long n, const std::string& curve) {
        return lrt_mean_curve(xbar, n, parse_curve(curve));
      },
      py::arg("xbar"), py::arg("n"), py::arg("curve"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from_json(config_json);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg);
        }
        py::dict d;
        d["lambda"] = to_array(res.lambda);
        d["pvalue"] = to_array(res.pvalue);
        d["summary"] = summary_to_json(cfg, res);
        return d;
      },
      py::arg("config_json"), "Runs a simulation from a JSON config; returns arrays and the summary JSON text.");
}
