#include "conelrt/harness.hpp"

#include "conelrt/rng.hpp"
#include "conelrt/suffstat.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace conelrt {

using nlohmann::json;

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (cfg.n < 1) throw std::invalid_argument("n must be >= 1");
  if (cfg.reference_reps < 1) throw std::invalid_argument("ref_reps must be >= 1");
  validate_law(parse_law(cfg.reference));
  if (const auto* f = std::get_if<FactorExperiment>(&cfg.model)) {
    const auto m = f->truth.gamma.size();
    if (m < 1 || f->truth.delta.size() != m) throw std::invalid_argument("gamma and delta must have equal length >= 1");
    if ((f->truth.delta.array() <= 0.0).any()) throw std::invalid_argument("delta must be positive");
    if (f->submodel_k < 0 || f->submodel_k > m) throw std::invalid_argument("k must lie in [1, m] (0 = saturated)");
    if (f->submodel_k == 0 && m < 4) throw std::invalid_argument("the saturated test needs m >= 4");
  } else if (const auto* fb = std::get_if<FeedbackExperiment>(&cfg.model)) {
    (void)f_cov(fb->truth);
  } else if (const auto* c = std::get_if<CurveExperiment>(&cfg.model)) {
    (void)curve_parameter(c->curve, c->mu0);
  }
  if (cfg.bartlett && !std::holds_alternative<FactorExperiment>(cfg.model)) {
    throw std::invalid_argument("bartlett correction applies to the factor model only");
  }
}

std::uint64_t reference_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x5be0cd19137e2179ULL); }

// ---------------------------------------------------------------------------

namespace {

struct Prepared {
  Eigen::MatrixXd sigma;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  if (const auto* f = std::get_if<FactorExperiment>(&cfg.model)) {
    p.sigma = cov_from_params(f->truth).values();
  } else if (const auto* fb = std::get_if<FeedbackExperiment>(&cfg.model)) {
    p.sigma = f_cov(fb->truth).values();
  }
  return p;
}

double statistic(const ExperimentConfig& cfg, const Prepared& prep, std::size_t r) {
  Stream stream(cfg.seed, r);
  if (const auto* f = std::get_if<FactorExperiment>(&cfg.model)) {
    const SuffStat d = draw_suffstat(prep.sigma, cfg.n, stream);
    double lambda = f->submodel_k == 0 ? lrt_saturated(d) : lrt_submodel(d, f->submodel_k);
    if (cfg.bartlett) lambda = bartlett_correct(lambda, cfg.n, d.m, 1);
    return lambda;
  }
  if (std::holds_alternative<FeedbackExperiment>(cfg.model)) {
    const SuffStat d = draw_suffstat(prep.sigma, cfg.n, stream);
    return mle_feedback(d).lambda;
  }
  const auto& c = std::get<CurveExperiment>(cfg.model);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n));
  const Eigen::Vector2d xbar = c.mu0 + scale * Eigen::Vector2d(stream.normal(), stream.normal());
  return lrt_mean_curve(xbar, cfg.n, c.curve);
}

}  // namespace

double replicate_statistic(const ExperimentConfig& cfg, std::size_t r) { return statistic(cfg, prepare(cfg), r); }

PValueFn::PValueFn(const LimitLaw& law, std::size_t reps, std::uint64_t seed, int threads) : law_(law) {
  if (!law_cdf(law_, 1.0).has_value()) sample_.emplace(sample_many(law_, reps, seed, threads));
}

std::optional<double> PValueFn::cdf(double t) const {
  if (sample_) return sample_->ecdf(t);
  return law_cdf(law_, t);
}

double PValueFn::operator()(double lambda) const {
  if (std::isnan(lambda)) return lambda;
  if (sample_) {
    // P(X >= lambda) under the reference sample
    const auto& s = sample_->sorted();
    const auto it = std::lower_bound(s.begin(), s.end(), lambda);
    return static_cast<double>(s.end() - it) / static_cast<double>(s.size());
  }
  if (const auto* c = std::get_if<ChiSq>(&law_)) return chisq_sf(c->df, lambda);
  return std::clamp(1.0 - *law_cdf(law_, lambda), 0.0, 1.0);
}

LevelEstimate empirical_level(const std::vector<double>& samples, double critical) {
  std::size_t total = 0, above = 0;
  for (double x : samples) {
    if (std::isnan(x)) continue;
    ++total;
    if (x > critical) ++above;
  }
  if (total == 0) throw std::invalid_argument("empirical_level: no finite samples");
  LevelEstimate out;
  out.rate = static_cast<double>(above) / static_cast<double>(total);
  out.stderr_ = std::sqrt(out.rate * (1.0 - out.rate) / static_cast<double>(total));
  return out;
}

CriticalValue estimate_critical(const LimitLaw& law, double p, std::size_t reps, std::uint64_t seed, int threads) {
  if (reps < 10000) throw std::invalid_argument("estimate_critical: reps must be >= 10000");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("estimate_critical: p must lie in (0, 1)");
  const EmpiricalDist d = sample_many(law, reps, seed, threads);
  const double n = static_cast<double>(reps);
  const double half = 1.959963984540054 * std::sqrt(n * p * (1.0 - p));
  CriticalValue out;
  out.value = d.quantile(p);
  out.lower = d.quantile(std::max(0.0, (n * p - half) / n));
  out.upper = d.quantile(std::min(1.0, (n * p + half) / n));
  out.stderr_ = (out.upper - out.lower) / (2.0 * 1.959963984540054);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const LimitLaw law = parse_law(cfg.reference);
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
  const PValueFn pvalue(law, cfg.reference_reps, reference_seed(cfg.seed), threads);
  const Prepared prep = prepare(cfg);

  ExperimentResult res;
  res.lambda.assign(cfg.reps, std::numeric_limits<double>::quiet_NaN());
  res.pvalue.assign(cfg.reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(cfg.reps, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t r = first; r < last; ++r) {
      try {
        const double lam = statistic(cfg, prep, r);
        if (!std::isfinite(lam)) continue;
        res.lambda[r] = lam;
        res.pvalue[r] = pvalue(lam);
      } catch (const std::exception&) {
        // counted below
      }
    }
  });

  std::vector<double> lam, pv;
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    if (std::isnan(res.lambda[r])) continue;
    lam.push_back(res.lambda[r]);
    pv.push_back(res.pvalue[r]);
  }
  ExperimentSummary& s = res.summary;
  s.ok = lam.size();
  s.failures = cfg.reps - s.ok;
  if (static_cast<double>(s.failures) > 0.01 * static_cast<double>(cfg.reps)) {
    throw std::runtime_error("run_experiment: " + std::to_string(s.failures) + " of " + std::to_string(cfg.reps) +
                             " replicates failed");
  }
  const EmpiricalDist dl(lam);
  s.mean = dl.mean();
  s.mean_stderr = std::sqrt(dl.variance() / static_cast<double>(s.ok));
  s.q50 = dl.quantile(0.5);
  s.q95 = dl.quantile(0.95);
  s.q99 = dl.quantile(0.99);
  const EmpiricalDist dp(pv);
  s.mean_pvalue = dp.mean();
  s.mean_pvalue_stderr = std::sqrt(dp.variance() / static_cast<double>(s.ok));
  s.ks_uniform = ks_uniform(pv);
  if (pvalue.sample()) {
    s.ks_reference = ks_two_sample(dl, *pvalue.sample());
    s.ks_critical_1pct = ks_critical(0.01, s.ok, pvalue.sample()->size());
  } else {
    s.ks_reference = ks_one_sample(dl, [&](double t) { return *law_cdf(law, t); });
    s.ks_critical_1pct = ks_critical(0.01, s.ok);
  }
  if (cfg.critical) s.level = empirical_level(lam, *cfg.critical);
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  if (const auto* f = std::get_if<FactorExperiment>(&cfg.model)) {
    j["model"] = "factor";
    j["m"] = f->truth.gamma.size();
    j["gamma"] = to_std(f->truth.gamma);
    j["delta"] = to_std(f->truth.delta);
    if (f->submodel_k > 0) {
      j["test"] = "submodel";
      j["k"] = f->submodel_k;
    } else {
      j["test"] = "saturated";
    }
  } else if (const auto* fb = std::get_if<FeedbackExperiment>(&cfg.model)) {
    j["model"] = "feedback";
    const auto& b = fb->truth.beta;
    j["beta"] = {{"b21", b.b21}, {"b24", b.b24}, {"b31", b.b31}, {"b32", b.b32}, {"b43", b.b43}};
    j["omega"] = std::vector<double>(fb->truth.omega.data(), fb->truth.omega.data() + 4);
  } else {
    const auto& c = std::get<CurveExperiment>(cfg.model);
    j["model"] = "curve";
    j["curve"] = curve_name(c.curve);
    j["mu0"] = {c.mu0(0), c.mu0(1)};
  }
  j["n"] = cfg.n;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["ref"] = cfg.reference;
  j["ref_reps"] = cfg.reference_reps;
  if (cfg.critical) j["critical"] = *cfg.critical;
  j["bartlett"] = cfg.bartlett;
  j["threads"] = cfg.threads;
  j["assumptions"] = cfg.assumptions;
  return j;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  try {
    ExperimentConfig cfg;
    const std::string model = get_or<std::string>(j, "model", "");
    if (model == "factor") {
      FactorExperiment f;
      if (!j.contains("gamma")) throw std::invalid_argument("factor model needs 'gamma'");
      f.truth.gamma = to_eigen(j.at("gamma").get<std::vector<double>>());
      const auto m = f.truth.gamma.size();
      if (j.contains("m") && j.at("m").get<long>() != m) throw std::invalid_argument("'m' disagrees with 'gamma'");
      std::vector<double> delta = get_or<std::vector<double>>(j, "delta", {});
      if (delta.size() == 1) delta.assign(static_cast<std::size_t>(m), delta.front());
      if (delta.empty()) throw std::invalid_argument("factor model needs 'delta'");
      f.truth.delta = to_eigen(delta);
      const std::string test = get_or<std::string>(j, "test", "saturated");
      if (test == "submodel") {
        f.submodel_k = get_or<int>(j, "k", 0);
        if (f.submodel_k < 1) throw std::invalid_argument("submodel test needs k >= 1");
      } else if (test != "saturated") {
        throw std::invalid_argument("test must be 'saturated' or 'submodel'");
      }
      cfg.model = f;
    } else if (model == "feedback") {
      FeedbackExperiment fb;
      if (!j.contains("beta")) throw std::invalid_argument("feedback model needs 'beta'");
      const json& b = j.at("beta");
      fb.truth.beta = {b.at("b21").get<double>(), b.at("b24").get<double>(), b.at("b31").get<double>(),
                       b.at("b32").get<double>(), b.at("b43").get<double>()};
      const auto omega = get_or<std::vector<double>>(j, "omega", {1.0, 1.0, 1.0, 1.0});
      if (omega.size() != 4) throw std::invalid_argument("omega needs 4 entries");
      fb.truth.omega = Eigen::Vector4d(omega[0], omega[1], omega[2], omega[3]);
      cfg.model = fb;
    } else if (model == "curve") {
      CurveExperiment c;
      c.curve = parse_curve(get_or<std::string>(j, "curve", "nodal"));
      const auto mu = get_or<std::vector<double>>(j, "mu0", {0.0, 0.0});
      if (mu.size() != 2) throw std::invalid_argument("mu0 needs 2 entries");
      c.mu0 = Eigen::Vector2d(mu[0], mu[1]);
      cfg.model = c;
    } else {
      throw std::invalid_argument("model must be 'factor', 'feedback' or 'curve'");
    }
    cfg.n = get_or<long>(j, "n", cfg.n);
    const long reps = get_or<long>(j, "reps", static_cast<long>(cfg.reps));
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    cfg.reps = static_cast<std::size_t>(reps);
    if (!j.contains("seed")) throw std::invalid_argument("'seed' is required");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.reference = get_or<std::string>(j, "ref", cfg.reference);
    const long ref_reps = get_or<long>(j, "ref_reps", static_cast<long>(cfg.reference_reps));
    if (ref_reps < 1) throw std::invalid_argument("ref_reps must be >= 1");
    cfg.reference_reps = static_cast<std::size_t>(ref_reps);
    if (j.contains("critical") && !j.at("critical").is_null()) cfg.critical = j.at("critical").get<double>();
    cfg.bartlett = get_or<bool>(j, "bartlett", false);
    cfg.threads = get_or<int>(j, "threads", 0);
    cfg.assumptions = get_or<std::vector<std::string>>(j, "assumptions", {});
    validate_config(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
}

std::string summary_to_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  const ExperimentSummary& s = res.summary;
  json j;
  j["config"] = config_json(cfg);
  j["replicates"] = cfg.reps;
  j["ok"] = s.ok;
  j["failures"] = s.failures;
  j["mean"] = s.mean;
  j["mean_stderr"] = s.mean_stderr;
  j["q50"] = s.q50;
  j["q95"] = s.q95;
  j["q99"] = s.q99;
  j["mean_pvalue"] = s.mean_pvalue;
  j["mean_pvalue_stderr"] = s.mean_pvalue_stderr;
  j["ks_uniform"] = s.ks_uniform;
  j["ks_reference"] = s.ks_reference;
  j["ks_critical_1pct"] = s.ks_critical_1pct;
  if (s.level) {
    j["level"] = s.level->rate;
    j["level_stderr"] = s.level->stderr_;
  }
  j["wall_seconds"] = s.wall_seconds;
  j["assumptions"] = cfg.assumptions;
  return j.dump(2);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw std::ios_base::failure("cannot write " + path);
}

void write_result_csv(const std::string& path, const ExperimentResult& res) {
  std::string text = "replicate,lambda,pvalue\n";
  char buf[128];
  for (std::size_t r = 0; r < res.lambda.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r, res.lambda[r], res.pvalue[r]);
    text += buf;
  }
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// Canned experiments

std::vector<double> table1_rhos() { return {0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2}; }

std::vector<Eigen::VectorXd> fig3_gammas() {
  return {Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d(1, 1, 1, 0), Eigen::Vector4d(1, 1, 0, 0),
          Eigen::Vector4d(1, 0, 0, 0)};
}

std::vector<double> fig4_rhos() { return {0.5, 0.3, 0.2, 0.1}; }

ExperimentConfig table1_config(int m, long n, double rho12, std::size_t reps, std::uint64_t seed, double critical) {
  if (m < 4) throw std::invalid_argument("table1_config: m must be >= 4");
  if (!(rho12 > 0.0 && rho12 < 1.0)) throw std::invalid_argument("table1_config: rho12 must lie in (0, 1)");
  FactorExperiment f;
  f.truth.gamma = Eigen::VectorXd::Zero(m);
  f.truth.delta = Eigen::VectorXd::Ones(m);
  f.truth.gamma(0) = f.truth.gamma(1) = std::sqrt(rho12);
  f.truth.delta(0) = f.truth.delta(1) = 1.0 - rho12;
  f.submodel_k = 3;
  ExperimentConfig cfg;
  cfg.model = f;
  cfg.n = n;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.reference = "maxeig:" + std::to_string(m);
  cfg.critical = critical;
  cfg.assumptions = {"truth is I + rho12 (E12 + E21): the correlation matrix in F_{m,03} with all other "
                     "correlations zero"};
  return cfg;
}

ExperimentConfig fig3_config(const Eigen::VectorXd& gamma, std::size_t reps, std::uint64_t seed) {
  FactorExperiment f;
  f.truth.gamma = gamma;
  f.truth.delta = Eigen::VectorXd::Constant(gamma.size(), 1.0 / 3.0);
  ExperimentConfig cfg;
  cfg.model = f;
  cfg.n = 1000;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.reference = "chisq:2";
  cfg.assumptions = {"loading patterns (1,1,1,1), (1,1,1,0), (1,1,0,0), (1,0,0,0) with delta = 1/3 inferred "
                     "from correlations being 0 or 3/4"};
  return cfg;
}

ExperimentConfig fig4_config(double rho, std::size_t reps, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("fig4_config: rho must lie in (0, 1)");
  FactorExperiment f;
  const double c = std::sqrt(rho);
  f.truth.gamma = Eigen::VectorXd::Constant(4, c);
  f.truth.delta = Eigen::VectorXd::Constant(4, 1.0 - rho);
  ExperimentConfig cfg;
  cfg.model = f;
  cfg.n = 50;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.reference = "chisq:2";
  cfg.assumptions = {"equicorrelation truth; panel correlations 0.5, 0.3, 0.2, 0.1 are an assumed choice"};
  return cfg;
}

}  // namespace conelrt
