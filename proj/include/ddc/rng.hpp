#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace ddc {

// Deterministic random stream addressed by (seed, index). Each sample of a
// batch draws from its own stream, so batches are reproducible and
// independent of execution order (and hence of the thread count).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t index = 0)
      : state_(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ull))) {
    if (state_ == 0) state_ = 0x853c49e6748fea9bull;
  }

  std::uint64_t next_u64() {
    // xorshift64*; plenty for sampling work.
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dull;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::MatrixXd gaussian_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer.
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ddc
