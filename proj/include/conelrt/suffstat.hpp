#ifndef CONELRT_SUFFSTAT_HPP
#define CONELRT_SUFFSTAT_HPP

#include "conelrt/rng.hpp"
#include "conelrt/symkit.hpp"

#include <Eigen/Dense>

#include <string>

namespace conelrt {

/// Sufficient statistic of a zero-mean Gaussian sample: S = (1/n) sum x x'.
struct SuffStat {
  int m = 0;
  long n = 0;
  Eigen::MatrixXd S;

  SuffStat() = default;
  /// Throws std::invalid_argument if S is not square symmetric or n < 1.
  SuffStat(Eigen::MatrixXd s, long n_obs);

  /// From an n x m data matrix (rows are observations, no centering).
  static SuffStat from_data(const Eigen::MatrixXd& x);
};

/// Draws S for n i.i.d. N(0, sigma) observations.  Uses the Bartlett
/// decomposition of the Wishart when n >= m, raw observations otherwise.
SuffStat draw_suffstat(const Eigen::MatrixXd& sigma, long n, Stream& rng);

/// Reads a CSV of raw observations (optional header row).
SuffStat read_data_csv(const std::string& path);

/// Reads {"n": ..., "S": [[...], ...]}.
SuffStat read_cov_json(const std::string& path);

}  // namespace conelrt

#endif  // CONELRT_SUFFSTAT_HPP
