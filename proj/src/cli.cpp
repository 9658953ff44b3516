#include "conelrt/cli.hpp"

#include "conelrt/harness.hpp"
#include "conelrt/rng.hpp"

#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace conelrt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// shortest text that reads back to the same double, for labels
std::string fmt_short(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + dir);
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  try {
    write_text(path.string(), text);
  } catch (const std::ios_base::failure& e) {
    throw OutputError(e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int resolve_threads(int flag) { return flag > 0 ? flag : default_threads(); }

void write_run(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentResult& res) {
  try {
    write_result_csv((dir / "result.csv").string(), res);
  } catch (const std::ios_base::failure& e) {
    throw OutputError(e.what());
  }
  write_file(dir / "summary.json", summary_to_json(cfg, res));
}

std::string summary_line(const std::string& label, const ExperimentSummary& s) {
  std::ostringstream os;
  os << label << ": ok=" << s.ok << " failures=" << s.failures << " mean=" << s.mean
     << " mean_pvalue=" << s.mean_pvalue << " (se " << s.mean_pvalue_stderr << ") ks_uniform=" << s.ks_uniform
     << " ks_reference=" << s.ks_reference;
  if (s.level) os << " level=" << s.level->rate << " (se " << s.level->stderr_ << ")";
  return os.str();
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string config, model, test, curve, ref, out;
  int m = 0, k = 0, threads = 0;
  std::vector<double> gamma, delta, beta, omega, mu0;
  long n = 0, reps = 0, ref_reps = 0;
  std::uint64_t seed = 0;
  double critical = 0.0;
  bool bartlett = false;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* sub = app.add_subcommand("simulate", "Monte Carlo run of one experiment");
  sub->add_option("--config", a.config, "JSON config (or a previous summary.json); flags override it");
  sub->add_option("--model", a.model, "factor, feedback or curve");
  sub->add_option("--m", a.m, "number of variables (factor)");
  sub->add_option("--gamma", a.gamma, "loadings (factor)")->delimiter(',');
  sub->add_option("--delta", a.delta, "uniquenesses; one value is broadcast (factor)")->delimiter(',');
  sub->add_option("--test", a.test, "saturated or submodel (factor)");
  sub->add_option("--k", a.k, "submodel index k, 1-based (factor)");
  sub->add_option("--beta", a.beta, "b21,b24,b31,b32,b43 (feedback)")->delimiter(',');
  sub->add_option("--omega", a.omega, "error variances (feedback)")->delimiter(',');
  sub->add_option("--curve", a.curve, "nodal or cuspidal (curve)");
  sub->add_option("--mu0", a.mu0, "true mean (curve)")->delimiter(',');
  sub->add_option("--n", a.n, "sample size");
  sub->add_option("--reps", a.reps, "replicates");
  sub->add_option("--seed", a.seed, "64-bit seed (required here or in the config)");
  sub->add_option("--ref", a.ref, "reference law for p-values, e.g. chisq:2");
  sub->add_option("--ref-reps", a.ref_reps, "reference draws when the law has no closed-form CDF");
  sub->add_option("--critical", a.critical, "critical value for the empirical level");
  sub->add_flag("--bartlett", a.bartlett, "apply the Bartlett correction (factor)");
  sub->add_option("--threads", a.threads, "worker cap (default: LRT_THREADS, then all cores)");
  sub->add_option("--out", a.out, "output directory")->required();
}

int run_simulate(CLI::App& sub, const SimulateArgs& a, std::ostream& out) {
  json j = json::object();
  if (!a.config.empty()) {
    try {
      j = json::parse(read_file(a.config));
    } catch (const json::exception& e) {
      throw std::invalid_argument("config " + a.config + " is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("config")) j = j.at("config");
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  }
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--model")) j["model"] = a.model;
  if (given("--m")) j["m"] = a.m;
  if (given("--gamma")) j["gamma"] = a.gamma;
  if (given("--delta")) j["delta"] = a.delta;
  if (given("--test")) j["test"] = a.test;
  if (given("--k")) {
    j["k"] = a.k;
    if (!given("--test") && !j.contains("test")) j["test"] = "submodel";
  }
  if (given("--beta")) {
    if (a.beta.size() != 5) throw UsageError("--beta needs 5 values b21,b24,b31,b32,b43");
    j["beta"] = {{"b21", a.beta[0]}, {"b24", a.beta[1]}, {"b31", a.beta[2]}, {"b32", a.beta[3]}, {"b43", a.beta[4]}};
  }
  if (given("--omega")) j["omega"] = a.omega;
  if (given("--curve")) j["curve"] = a.curve;
  if (given("--mu0")) j["mu0"] = a.mu0;
  if (given("--n")) j["n"] = a.n;
  if (given("--reps")) j["reps"] = a.reps;
  if (given("--seed")) j["seed"] = a.seed;
  if (given("--ref")) j["ref"] = a.ref;
  if (given("--ref-reps")) j["ref_reps"] = a.ref_reps;
  if (given("--critical")) j["critical"] = a.critical;
  if (given("--bartlett")) j["bartlett"] = a.bartlett;
  if (!j.contains("seed")) throw UsageError("--seed is required (no clock-based default)");
  if (!j.contains("model")) throw UsageError("--model is required");

  ExperimentConfig cfg = config_from_json(j.dump());
  cfg.threads = resolve_threads(given("--threads") ? a.threads : 0);
  const fs::path dir = prepare_out(a.out);
  const ExperimentResult res = run_experiment(cfg);
  cfg.threads = 0;  // the echo should not pin a worker count
  write_run(dir, cfg, res);
  out << summary_line("simulate", res.summary) << "\n";
  return kOk;
}

// limit -----------------------------------------------------------------------

struct LimitArgs {
  std::string law, out;
  long reps = 100000;
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_limit(CLI::App& app, LimitArgs& a) {
  auto* sub = app.add_subcommand("limit", "Draw from a limiting law");
  sub->add_option("--law", a.law, "law, e.g. maxeig:4 or cone:alg:4:0:1")->required();
  sub->add_option("--reps", a.reps, "draws");
  sub->add_option("--seed", a.seed, "64-bit seed")->required();
  sub->add_option("--threads", a.threads, "worker cap");
  sub->add_option("--out", a.out, "output directory")->required();
}

int run_limit(const LimitArgs& a, std::ostream& out) {
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  const LimitLaw law = parse_law(a.law);
  validate_law(law);
  const fs::path dir = prepare_out(a.out);
  const auto reps = static_cast<std::size_t>(a.reps);
  std::vector<double> draws(reps);
  parallel_for(reps, resolve_threads(a.threads), [&](std::size_t first, std::size_t last) {
    for (std::size_t r = first; r < last; ++r) {
      Stream stream(a.seed, r);
      draws[r] = sample_law(law, stream);
    }
  });
  std::string csv = "replicate,value\n";
  for (std::size_t r = 0; r < reps; ++r) csv += std::to_string(r) + "," + fmt17(draws[r]) + "\n";
  write_file(dir / "draws.csv", csv);
  const EmpiricalDist d(draws);
  json s = {{"law", format_law(law)}, {"reps", reps},        {"seed", a.seed},
            {"mean", d.mean()},       {"q50", d.quantile(0.5)}, {"q95", d.quantile(0.95)},
            {"q99", d.quantile(0.99)}};
  write_file(dir / "summary.json", s.dump(2));
  out << "limit " << format_law(law) << ": mean=" << d.mean() << " q95=" << d.quantile(0.95) << "\n";
  return kOk;
}

// project ---------------------------------------------------------------------

struct ProjectArgs {
  std::string cone, in, out;
};

void add_project(CLI::App& app, ProjectArgs& a) {
  auto* sub = app.add_subcommand("project", "Squared distances from vech vectors to a cone");
  sub->add_option("--cone", a.cone, "cone, e.g. diag:4, alg:4:0:1, tan:4:0:1:0.5, twolines:0.3")->required();
  sub->add_option("--in", a.in, "CSV with one vector per row (optional header)")->required();
  sub->add_option("--out", a.out, "output directory")->required();
}

std::vector<Eigen::VectorXd> read_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && width < 0 && lineno == 1) continue;  // header
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": non-numeric entry");
    }
    if (width >= 0 && static_cast<Eigen::Index>(vals.size()) != width) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": row length differs");
    }
    width = static_cast<Eigen::Index>(vals.size());
    rows.push_back(Eigen::Map<const Eigen::VectorXd>(vals.data(), width));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  return rows;
}

int run_project(const ProjectArgs& a, std::ostream& out) {
  const std::string text = a.cone.rfind("cone:", 0) == 0 ? a.cone : "cone:" + a.cone;
  const LimitLaw law = parse_law(text);
  const auto& cone = std::get<ConeDistance>(law).cone;
  const auto rows = read_vectors(a.in);
  if (rows.front().size() != ambient_dim(cone)) {
    throw std::invalid_argument("vectors have length " + std::to_string(rows.front().size()) + " but the cone lives in R^" +
                                std::to_string(ambient_dim(cone)));
  }
  const fs::path dir = prepare_out(a.out);
  std::string csv = "row,dist2";
  for (Eigen::Index c = 0; c < rows.front().size(); ++c) csv += ",p" + std::to_string(c);
  csv += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ConeProjection p = dist2_cone(rows[r], cone);
    csv += std::to_string(r) + "," + fmt17(p.dist2);
    for (Eigen::Index c = 0; c < p.point.size(); ++c) csv += "," + fmt17(p.point(c));
    csv += "\n";
  }
  write_file(dir / "projection.csv", csv);
  out << "project: " << rows.size() << " rows\n";
  return kOk;
}

// quantile --------------------------------------------------------------------

struct QuantileArgs {
  std::string law, out;
  double p = 0.95;
  long reps = 200000;
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_quantile(CLI::App& app, QuantileArgs& a) {
  auto* sub = app.add_subcommand("quantile", "Monte Carlo quantile of a limiting law");
  sub->add_option("--law", a.law, "law text")->required();
  sub->add_option("--p", a.p, "probability");
  sub->add_option("--reps", a.reps, "draws (>= 10000)");
  sub->add_option("--seed", a.seed, "64-bit seed")->required();
  sub->add_option("--threads", a.threads, "worker cap");
  sub->add_option("--out", a.out, "optional output directory for quantile.json");
}

int run_quantile(const QuantileArgs& a, std::ostream& out) {
  if (a.reps < 10000) throw UsageError("--reps must be >= 10000");
  const LimitLaw law = parse_law(a.law);
  const CriticalValue c =
      estimate_critical(law, a.p, static_cast<std::size_t>(a.reps), a.seed, resolve_threads(a.threads));
  out << "value " << fmt17(c.value) << "\nstderr " << fmt17(c.stderr_) << "\nband95 " << fmt17(c.lower) << " "
      << fmt17(c.upper) << "\n";
  if (!a.out.empty()) {
    const fs::path dir = prepare_out(a.out);
    json j = {{"law", format_law(law)}, {"p", a.p},          {"reps", a.reps},         {"seed", a.seed},
              {"value", c.value},       {"stderr", c.stderr_}, {"lower", c.lower}, {"upper", c.upper}};
    write_file(dir / "quantile.json", j.dump(2));
  }
  return kOk;
}

// table1 ----------------------------------------------------------------------

struct Table1Args {
  std::vector<int> ms{4, 8};
  std::vector<long> ns{100, 200, 500};
  std::vector<double> rhos = table1_rhos();
  long reps = 20000, crit_reps = 200000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

void add_table1(CLI::App& app, Table1Args& a) {
  auto* sub = app.add_subcommand("table1", "Levels of the conservative H_03 test");
  sub->add_option("--m", a.ms, "variable counts")->delimiter(',');
  sub->add_option("--n", a.ns, "sample sizes")->delimiter(',');
  sub->add_option("--rho", a.rhos, "values of rho12")->delimiter(',');
  sub->add_option("--reps", a.reps, "replicates per cell");
  sub->add_option("--crit-reps", a.crit_reps, "draws for each critical value");
  sub->add_option("--seed", a.seed, "64-bit seed")->required();
  sub->add_option("--threads", a.threads, "worker cap");
  sub->add_option("--out", a.out, "output directory")->required();
}

int run_table1(const Table1Args& a, std::ostream& out) {
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  if (a.crit_reps < 10000) throw UsageError("--crit-reps must be >= 10000");
  const int threads = resolve_threads(a.threads);
  const fs::path dir = prepare_out(a.out);
  std::string levels = "m,n,rho12,level,stderr,critical,reps,failures\n";
  std::string wide = "m,n";
  for (double r : a.rhos) wide += "," + fmt_short(r);
  wide += "\n";
  json crit = json::object();
  std::uint64_t cell = 0;
  for (int m : a.ms) {
    const CriticalValue c = estimate_critical(MaxEig{m}, 0.95, static_cast<std::size_t>(a.crit_reps),
                                              Stream::derive_key(a.seed, 1000000 + m), threads);
    crit[std::to_string(m)] = {{"value", c.value}, {"stderr", c.stderr_}};
    for (long n : a.ns) {
      wide += std::to_string(m) + "," + std::to_string(n);
      for (double rho : a.rhos) {
        ExperimentConfig cfg =
            table1_config(m, n, rho, static_cast<std::size_t>(a.reps), Stream::derive_key(a.seed, cell++), c.value);
        cfg.reference_reps = static_cast<std::size_t>(a.crit_reps);
        cfg.threads = threads;
        const ExperimentResult res = run_experiment(cfg);
        const LevelEstimate& lv = *res.summary.level;
        levels += std::to_string(m) + "," + std::to_string(n) + "," + fmt_short(rho) + "," + fmt17(lv.rate) + "," +
                  fmt17(lv.stderr_) + "," + fmt17(c.value) + "," + std::to_string(a.reps) + "," +
                  std::to_string(res.summary.failures) + "\n";
        wide += "," + fmt17(lv.rate);
        out << "table1 m=" << m << " n=" << n << " rho12=" << rho << ": level=" << lv.rate << " (se " << lv.stderr_
            << ")\n";
      }
      wide += "\n";
    }
  }
  write_file(dir / "levels.csv", levels);
  write_file(dir / "table1.csv", wide);
  json s = {{"seed", a.seed}, {"reps", a.reps}, {"crit_reps", a.crit_reps}, {"critical", crit},
            {"assumptions", table1_config(4, 100, 0.5, 1, 0, 0.0).assumptions}};
  write_file(dir / "summary.json", s.dump(2));
  return kOk;
}

// fig3 / fig4 -----------------------------------------------------------------

struct FigArgs {
  long reps = 20000;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

void add_fig(CLI::App& app, const char* name, const char* help, FigArgs& a) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--reps", a.reps, "replicates per panel");
  sub->add_option("--seed", a.seed, "64-bit seed")->required();
  sub->add_option("--threads", a.threads, "worker cap");
  sub->add_option("--out", a.out, "output directory")->required();
}

int run_panels(const std::vector<std::pair<std::string, ExperimentConfig>>& panels, const FigArgs& a,
               const char* name, std::ostream& out) {
  const fs::path dir = prepare_out(a.out);
  const int threads = resolve_threads(a.threads);
  for (const auto& [label, base] : panels) {
    ExperimentConfig cfg = base;
    cfg.threads = threads;
    const ExperimentResult res = run_experiment(cfg);
    cfg.threads = 0;
    const fs::path sub = prepare_out((dir / label).string());
    write_run(sub, cfg, res);
    out << summary_line(std::string(name) + " " + label, res.summary) << "\n";
  }
  return kOk;
}

int run_fig3(const FigArgs& a, std::ostream& out) {
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  std::vector<std::pair<std::string, ExperimentConfig>> panels;
  std::uint64_t i = 0;
  for (const Eigen::VectorXd& g : fig3_gammas()) {
    std::string label = "gamma_";
    for (Eigen::Index k = 0; k < g.size(); ++k) label += std::to_string(static_cast<int>(g(k)));
    panels.emplace_back(label, fig3_config(g, static_cast<std::size_t>(a.reps), Stream::derive_key(a.seed, i++)));
  }
  return run_panels(panels, a, "fig3", out);
}

int run_fig4(const FigArgs& a, std::ostream& out) {
  if (a.reps < 1) throw UsageError("--reps must be >= 1");
  std::vector<std::pair<std::string, ExperimentConfig>> panels;
  std::uint64_t i = 0;
  for (double rho : fig4_rhos()) {
    char label[32];
    std::snprintf(label, sizeof label, "rho_%g", rho);
    panels.emplace_back(label, fig4_config(rho, static_cast<std::size_t>(a.reps), Stream::derive_key(a.seed, i++)));
  }
  return run_panels(panels, a, "fig4", out);
}

}  // namespace

int parse_and_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Likelihood ratio tests at model singularities: Monte Carlo harness", "conelrt"};
  app.require_subcommand(1, 1);
  SimulateArgs sim;
  LimitArgs lim;
  ProjectArgs proj;
  QuantileArgs quant;
  Table1Args t1;
  FigArgs f3, f4;
  add_simulate(app, sim);
  add_limit(app, lim);
  add_project(app, proj);
  add_quantile(app, quant);
  add_table1(app, t1);
  add_fig(app, "fig3", "p-value panels for four loading patterns (n = 1000)", f3);
  add_fig(app, "fig4", "p-value panels for equicorrelation truths (n = 50)", f4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "conelrt: " << e.what() << "\n";
    return kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return run_simulate(*sub, sim, out);
    if (name == "limit") return run_limit(lim, out);
    if (name == "project") return run_project(proj, out);
    if (name == "quantile") return run_quantile(quant, out);
    if (name == "table1") return run_table1(t1, out);
    if (name == "fig3") return run_fig3(f3, out);
    if (name == "fig4") return run_fig4(f4, out);
    err << "conelrt: unknown command " << name << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "conelrt: " << e.what() << "\n";
    return kUsage;
  } catch (const OutputError& e) {
    err << "conelrt: " << e.what() << "\n";
    return kCantCreate;
  } catch (const std::invalid_argument& e) {
    err << "conelrt: " << e.what() << "\n";
    return kData;
  } catch (const std::domain_error& e) {
    err << "conelrt: " << e.what() << "\n";
    return kData;
  } catch (const std::out_of_range& e) {
    err << "conelrt: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "conelrt: internal error: " << e.what() << "\n";
    return kInternal;
  }
}

int parse_and_run(int argc, const char* const* argv) { return parse_and_run(argc, argv, std::cout, std::cerr); }

}  // namespace conelrt::cli
