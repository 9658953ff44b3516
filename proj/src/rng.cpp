#include "conelrt/rng.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace conelrt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t key) {
  std::uint64_t z = key;
  for (auto& word : s_) {
    z = splitmix64(z);
    word = z;
  }
}

Xoshiro256::result_type Xoshiro256::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Stream::derive_key(std::uint64_t seed, std::uint64_t index) {
  // Two rounds so that neighbouring (seed, index) pairs land far apart.
  return splitmix64(splitmix64(seed) ^ splitmix64(index ^ 0xd1b54a32d192ed03ULL));
}

Stream::Stream(std::uint64_t seed, std::uint64_t index) : engine_(derive_key(seed, index)) {}

double Stream::chi_square(double df) {
  if (df < 0.0) throw std::invalid_argument("chi_square: negative degrees of freedom");
  if (df == 0.0) return 0.0;
  if (df == 1.0) {
    const double z = normal();
    return z * z;
  }
  std::chi_squared_distribution<double> dist(df);
  return dist(engine_);
}

Eigen::VectorXd Stream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::MatrixXd Stream::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = normal();
  return a;
}

int default_threads() {
  if (const char* env = std::getenv("LRT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace conelrt
