#ifndef CONELRT_RNG_HPP
#define CONELRT_RNG_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace conelrt {

/// SplitMix64 finalizer; used to hash (seed, index) pairs into stream keys.
std::uint64_t splitmix64(std::uint64_t x);

/// xoshiro256** generator.  Satisfies UniformRandomBitGenerator so it can
/// drive the <random> distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Per-draw random stream keyed by (seed, index).  Streams for distinct
/// indices never share state, so draws can be evaluated in any order or on
/// any number of workers with identical results.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index);

  /// Key derivation used by the constructor; exposed for tests.
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Chi-square draw; df == 0 is a point mass at zero.
  double chi_square(double df);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  Xoshiro256& engine() { return engine_; }

 private:
  Xoshiro256 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Runs body(first, last) over [0, count) split into contiguous chunks on
/// up to `threads` workers.  threads <= 0 means hardware concurrency.
/// Exceptions thrown by a worker are rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body);

/// Worker count from LRT_THREADS, falling back to hardware concurrency.
int default_threads();

}  // namespace conelrt

#include "conelrt/detail/parallel.hpp"

#endif  // CONELRT_RNG_HPP
