#ifndef CONELRT_LAWS_HPP
#define CONELRT_LAWS_HPP

#include "conelrt/cones.hpp"
#include "conelrt/empirical.hpp"
#include "conelrt/rng.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conelrt {

struct ChiSq {
  int df = 1;
};

/// sum_k w_k chi2_{d_k}
struct ChiBarMix {
  std::vector<double> weights;
  std::vector<int> dfs;
};

/// Minimum of `count` independent chi2_df draws.
struct MinIndepChiSq {
  int count = 1;
  int df = 1;
};

/// min((u1'Z)^2, (u2'Z)^2) for unit u1, u2 in the plane with u1'u2 = rho.
struct TwoLineMin {
  double rho = 0.0;
};

/// W12 + min(W13, W23), W's independent chi2_1.
struct Example27 {};

/// chi2 with (m-2 choose 2) df plus the smaller eigenvalue of an
/// independent 2 x 2 Wishart with m - 2 df.
struct VPlusW {
  int m = 4;
};

/// Larger eigenvalue of a 2 x 2 Wishart with m - 2 df.
struct MaxEig {
  int m = 4;
};

struct ConeDistance {
  ConeDescriptor cone;
  std::string label = "cone";  // text form when built by parse_law
};

using LimitLaw =
    std::variant<ChiSq, ChiBarMix, MinIndepChiSq, TwoLineMin, Example27, VPlusW, MaxEig, ConeDistance>;

/// Throws std::invalid_argument for malformed laws (negative df, weights
/// not a probability vector, m < 4, |rho| > 1).
void validate_law(const LimitLaw& law);

/// One draw.
double sample_law(const LimitLaw& law, Stream& rng);

/// reps draws, draw r from Stream(seed, r).
EmpiricalDist sample_many(const LimitLaw& law, std::size_t reps, std::uint64_t seed, int threads = 0);

/// Eigenvalues (smaller, larger) of G G' for G a 2 x k standard normal
/// matrix, from the trace and determinant.
std::pair<double, double> wishart2_eigenvalues(Stream& rng, int k);
/// Eigenvalues of the PSD matrix [a b; b c]; the smaller is clamped at 0.
std::pair<double, double> sym2_eigenvalues(double a, double b, double c);

/// Exact CDF where one is available in closed form (chi-square based laws);
/// empty otherwise.
std::optional<double> law_cdf(const LimitLaw& law, double t);

/// Chi-square survival P(chi2_df > t); df = 0 gives 0 for t >= 0.
double chisq_sf(double df, double t);
double chisq_cdf(double df, double t);
double chisq_quantile(double df, double p);

/// Parses "chisq:2", "chibar:0.5,0.5:1,2", "minchisq:2:1", "twoline:0.3",
/// "ex27", "vplusw:4", "maxeig:4", "cone:diag:4", "cone:alg:5:0:1",
/// "cone:tan:5:0:1:0.7[:neg]", "cone:twolines:0.3".
LimitLaw parse_law(const std::string& text);
std::string format_law(const LimitLaw& law);

}  // namespace conelrt

#endif  // CONELRT_LAWS_HPP
