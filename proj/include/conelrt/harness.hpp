#ifndef CONELRT_HARNESS_HPP
#define CONELRT_HARNESS_HPP

#include "conelrt/curves.hpp"
#include "conelrt/empirical.hpp"
#include "conelrt/factor.hpp"
#include "conelrt/feedback.hpp"
#include "conelrt/laws.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conelrt {

struct FactorExperiment {
  FactorParams truth;
  int submodel_k = 0;  // 0: test against the saturated model; else H_0k
};

struct FeedbackExperiment {
  FeedbackParams truth;
};

struct CurveExperiment {
  PlaneCurve curve = PlaneCurve::Nodal;
  Eigen::Vector2d mu0 = Eigen::Vector2d::Zero();
};

using ExperimentModel = std::variant<FactorExperiment, FeedbackExperiment, CurveExperiment>;

struct ExperimentConfig {
  ExperimentModel model;
  long n = 1000;
  std::size_t reps = 1000;
  std::uint64_t seed = 0;
  std::string reference = "chisq:1";  // law text, see parse_law
  std::size_t reference_reps = 100000;  // draws when the law has no closed-form CDF
  std::optional<double> critical;  // level is reported when set
  bool bartlett = false;
  int threads = 0;
  std::vector<std::string> assumptions;
};

/// Throws std::invalid_argument for inconsistent configs.
void validate_config(const ExperimentConfig& cfg);

struct LevelEstimate {
  double rate = 0.0;
  double stderr_ = 0.0;
};

struct ExperimentSummary {
  std::size_t ok = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double mean_stderr = 0.0;
  double q50 = 0.0, q95 = 0.0, q99 = 0.0;
  double mean_pvalue = 0.0;
  double mean_pvalue_stderr = 0.0;
  double ks_uniform = 0.0;    // p-values against U(0, 1)
  double ks_reference = 0.0;  // lambda against the reference law
  double ks_critical_1pct = 0.0;
  std::optional<LevelEstimate> level;
  double wall_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<double> lambda;  // NaN marks a failed replicate
  std::vector<double> pvalue;
  ExperimentSummary summary;
};

/// Runs cfg.reps replicates; replicate r draws its data from
/// Stream(cfg.seed, r), so results do not depend on the worker count.
/// Throws std::runtime_error if more than 1% of the replicates fail.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// One replicate's statistic (exposed for tests).
double replicate_statistic(const ExperimentConfig& cfg, std::size_t r);

/// Fraction of finite samples strictly above `critical`, with the binomial
/// standard error.
LevelEstimate empirical_level(const std::vector<double>& samples, double critical);

struct CriticalValue {
  double value = 0.0;
  double lower = 0.0;  // order-statistic 95% band
  double upper = 0.0;
  double stderr_ = 0.0;
};

/// Empirical p-quantile of sample_many(law, reps, seed).  Needs reps >= 1e4.
CriticalValue estimate_critical(const LimitLaw& law, double p, std::size_t reps, std::uint64_t seed,
                                int threads = 0);

/// Reference-law p-value helper: closed-form survival where available,
/// otherwise the empirical survival of `reference`.
class PValueFn {
 public:
  PValueFn(const LimitLaw& law, std::size_t reps, std::uint64_t seed, int threads);
  double operator()(double lambda) const;
  std::optional<double> cdf(double t) const;
  const std::optional<EmpiricalDist>& sample() const { return sample_; }

 private:
  LimitLaw law_;
  std::optional<EmpiricalDist> sample_;
};

/// Seed used for the reference sample of a run with the given seed.
std::uint64_t reference_seed(std::uint64_t seed);

// JSON forms of configs and summaries.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
std::string summary_to_json(const ExperimentConfig& cfg, const ExperimentResult& res);

/// result.csv: replicate,lambda,pvalue with 17 significant digits.
void write_result_csv(const std::string& path, const ExperimentResult& res);
void write_text(const std::string& path, const std::string& text);

// Canned experiment families.
ExperimentConfig table1_config(int m, long n, double rho12, std::size_t reps, std::uint64_t seed, double critical);
ExperimentConfig fig3_config(const Eigen::VectorXd& gamma, std::size_t reps, std::uint64_t seed);
ExperimentConfig fig4_config(double rho, std::size_t reps, std::uint64_t seed);

/// Loadings of the four saturated-test panels.
std::vector<Eigen::VectorXd> fig3_gammas();
/// Pairwise correlations of the equicorrelation panels.
std::vector<double> fig4_rhos();
std::vector<double> table1_rhos();

}  // namespace conelrt

#endif  // CONELRT_HARNESS_HPP
