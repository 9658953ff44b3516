#include "conelrt/laws.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conelrt {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

int binom2(int k) { return k * (k - 1) / 2; }

}  // namespace

double chisq_cdf(double df, double t) {
  if (df < 0.0) throw std::invalid_argument("chisq_cdf: negative df");
  if (t <= 0.0) return df == 0.0 && t == 0.0 ? 1.0 : 0.0;
  if (df == 0.0) return 1.0;
  if (std::isinf(t)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), t);
}

double chisq_sf(double df, double t) {
  if (df < 0.0) throw std::invalid_argument("chisq_sf: negative df");
  if (t < 0.0) return 1.0;
  if (df == 0.0) return 0.0;
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), t));
}

double chisq_quantile(double df, double p) {
  if (df < 0.0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("chisq_quantile: bad arguments");
  if (df == 0.0 || p == 0.0) return 0.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

std::pair<double, double> sym2_eigenvalues(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double r = std::hypot(0.5 * (a - c), b);
  const double top = mid + r;
  // det / top avoids cancellation in mid - r
  const double bottom = top > 0.0 ? (a * c - b * b) / top : mid - r;
  return {std::max(0.0, bottom), top};
}

std::pair<double, double> wishart2_eigenvalues(Stream& rng, int k) {
  if (k < 0) throw std::invalid_argument("wishart2_eigenvalues: negative df");
  double a = 0.0, b = 0.0, c = 0.0;
  for (int col = 0; col < k; ++col) {
    const double x = rng.normal();
    const double y = rng.normal();
    a += x * x;
    b += x * y;
    c += y * y;
  }
  return sym2_eigenvalues(a, b, c);
}

void validate_law(const LimitLaw& law) {
  std::visit(Overloaded{
                 [](const ChiSq& l) {
                   if (l.df < 0) throw std::invalid_argument("ChiSq: df must be >= 0");
                 },
                 [](const ChiBarMix& l) {
                   if (l.weights.empty() || l.weights.size() != l.dfs.size()) {
                     throw std::invalid_argument("ChiBarMix: weights and dfs must be nonempty and of equal length");
                   }
                   double total = 0.0;
                   for (double w : l.weights) {
                     if (!(w >= 0.0)) throw std::invalid_argument("ChiBarMix: negative weight");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("ChiBarMix: weights must sum to 1");
                   for (int d : l.dfs)
                     if (d < 0) throw std::invalid_argument("ChiBarMix: df must be >= 0");
                 },
                 [](const MinIndepChiSq& l) {
                   if (l.count < 1) throw std::invalid_argument("MinIndepChiSq: count must be >= 1");
                   if (l.df < 0) throw std::invalid_argument("MinIndepChiSq: df must be >= 0");
                 },
                 [](const TwoLineMin& l) {
                   if (!(l.rho >= -1.0 && l.rho <= 1.0)) throw std::invalid_argument("TwoLineMin: rho must lie in [-1, 1]");
                 },
                 [](const Example27&) {},
                 [](const VPlusW& l) {
                   if (l.m < 4) throw std::invalid_argument("VPlusW: m must be >= 4");
                 },
                 [](const MaxEig& l) {
                   if (l.m < 4) throw std::invalid_argument("MaxEig: m must be >= 4");
                 },
                 [](const ConeDistance&) {},
             },
             law);
}

double sample_law(const LimitLaw& law, Stream& rng) {
  return std::visit(
      Overloaded{
          [&](const ChiSq& l) { return rng.chi_square(l.df); },
          [&](const ChiBarMix& l) {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t k = 0;
            for (; k + 1 < l.weights.size(); ++k) {
              acc += l.weights[k];
              if (u < acc) break;
            }
            return rng.chi_square(l.dfs[k]);
          },
          [&](const MinIndepChiSq& l) {
            double best = std::numeric_limits<double>::infinity();
            for (int k = 0; k < l.count; ++k) best = std::min(best, rng.chi_square(l.df));
            return best;
          },
          [&](const TwoLineMin& l) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            const double p2 = l.rho * z1 + std::sqrt(std::max(0.0, 1.0 - l.rho * l.rho)) * z2;
            return std::min(z1 * z1, p2 * p2);
          },
          [&](const Example27&) {
            const double w12 = rng.chi_square(1);
            const double w13 = rng.chi_square(1);
            const double w23 = rng.chi_square(1);
            return w12 + std::min(w13, w23);
          },
          [&](const VPlusW& l) {
            const double v = rng.chi_square(binom2(l.m - 2));
            return v + wishart2_eigenvalues(rng, l.m - 2).first;
          },
          [&](const MaxEig& l) { return wishart2_eigenvalues(rng, l.m - 2).second; },
          [&](const ConeDistance& l) {
            return dist2_cone(rng.normal_vector(ambient_dim(l.cone)), l.cone).dist2;
          },
      },
      law);
}

EmpiricalDist sample_many(const LimitLaw& law, std::size_t reps, std::uint64_t seed, int threads) {
  if (reps == 0) throw std::invalid_argument("sample_many: reps must be >= 1");
  validate_law(law);
  std::vector<double> out(reps);
  parallel_for(reps, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t r = first; r < last; ++r) {
      Stream stream(seed, r);
      out[r] = sample_law(law, stream);
    }
  });
  return EmpiricalDist(std::move(out));
}

std::optional<double> law_cdf(const LimitLaw& law, double t) {
  return std::visit(Overloaded{
                        [&](const ChiSq& l) -> std::optional<double> { return chisq_cdf(l.df, t); },
                        [&](const ChiBarMix& l) -> std::optional<double> {
                          double s = 0.0;
                          for (std::size_t k = 0; k < l.weights.size(); ++k) s += l.weights[k] * chisq_cdf(l.dfs[k], t);
                          return s;
                        },
                        [&](const MinIndepChiSq& l) -> std::optional<double> {
                          return 1.0 - std::pow(1.0 - chisq_cdf(l.df, t), l.count);
                        },
                        [&](const TwoLineMin& l) -> std::optional<double> {
                          if (std::abs(l.rho) == 1.0) return chisq_cdf(1, t);
                          return std::nullopt;
                        },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    law);
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

int to_int(const std::string& s, const std::string& ctx) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("law '" + ctx + "': expected an integer, got '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("law '" + ctx + "': expected an integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& ctx) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("law '" + ctx + "': expected a number, got '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument("law '" + ctx + "': expected a number, got '" + s + "'");
  return v;
}

void need(const std::vector<std::string>& parts, std::size_t lo, std::size_t hi, const std::string& ctx) {
  if (parts.size() < lo || parts.size() > hi) throw std::invalid_argument("law '" + ctx + "': wrong number of fields");
}

std::string num(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

LimitLaw parse_law(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw std::invalid_argument("empty law");
  const std::string& head = parts[0];
  LimitLaw law;
  if (head == "chisq") {
    need(parts, 2, 2, text);
    law = ChiSq{to_int(parts[1], text)};
  } else if (head == "chibar") {
    need(parts, 3, 3, text);
    ChiBarMix mix;
    for (const auto& w : split(parts[1], ',')) mix.weights.push_back(to_double(w, text));
    for (const auto& d : split(parts[2], ',')) mix.dfs.push_back(to_int(d, text));
    law = mix;
  } else if (head == "minchisq") {
    need(parts, 3, 3, text);
    law = MinIndepChiSq{to_int(parts[1], text), to_int(parts[2], text)};
  } else if (head == "twoline") {
    need(parts, 2, 2, text);
    law = TwoLineMin{to_double(parts[1], text)};
  } else if (head == "ex27") {
    need(parts, 1, 1, text);
    law = Example27{};
  } else if (head == "vplusw") {
    need(parts, 2, 2, text);
    law = VPlusW{to_int(parts[1], text)};
  } else if (head == "maxeig") {
    need(parts, 2, 2, text);
    law = MaxEig{to_int(parts[1], text)};
  } else if (head == "cone") {
    if (parts.size() < 2) throw std::invalid_argument("law '" + text + "': missing cone kind");
    const std::string& kind = parts[1];
    ConeDescriptor cone;
    if (kind == "diag") {
      need(parts, 3, 4, text);
      cone = factor_diag_cone(to_int(parts[2], text), parts.size() == 4 ? to_int(parts[3], text) : 20);
    } else if (kind == "alg") {
      need(parts, 5, 5, text);
      cone = factor_alg_cone(to_int(parts[2], text), to_int(parts[3], text), to_int(parts[4], text));
    } else if (kind == "tan") {
      need(parts, 6, 7, text);
      bool negative = false;
      if (parts.size() == 7) {
        if (parts[6] != "neg") throw std::invalid_argument("law '" + text + "': last field must be 'neg'");
        negative = true;
      }
      cone = factor_tan_cone(to_int(parts[2], text), to_int(parts[3], text), to_int(parts[4], text),
                             to_double(parts[5], text), negative);
    } else if (kind == "twolines") {
      need(parts, 3, 3, text);
      cone = two_lines(to_double(parts[2], text));
    } else {
      throw std::invalid_argument("law '" + text + "': unknown cone kind '" + kind + "'");
    }
    law = ConeDistance{std::move(cone), text};
  } else {
    throw std::invalid_argument("unknown law '" + head + "'");
  }
  validate_law(law);
  return law;
}

std::string format_law(const LimitLaw& law) {
  return std::visit(Overloaded{
                        [](const ChiSq& l) { return "chisq:" + std::to_string(l.df); },
                        [](const ChiBarMix& l) {
                          std::string w, d;
                          for (std::size_t k = 0; k < l.weights.size(); ++k) {
                            if (k) {
                              w += ',';
                              d += ',';
                            }
                            w += num(l.weights[k]);
                            d += std::to_string(l.dfs[k]);
                          }
                          return "chibar:" + w + ":" + d;
                        },
                        [](const MinIndepChiSq& l) {
                          return "minchisq:" + std::to_string(l.count) + ":" + std::to_string(l.df);
                        },
                        [](const TwoLineMin& l) { return "twoline:" + num(l.rho); },
                        [](const Example27&) { return std::string("ex27"); },
                        [](const VPlusW& l) { return "vplusw:" + std::to_string(l.m); },
                        [](const MaxEig& l) { return "maxeig:" + std::to_string(l.m); },
                        [](const ConeDistance& l) { return l.label; },
                    },
                    law);
}

}  // namespace conelrt
