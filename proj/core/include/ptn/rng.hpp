#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

#include "ptn/errors.hpp"

namespace ptn {

class Matrix;

// Deterministic random source: same seed, identical stream. The gaussian
// path is Box-Muller on top of mt19937_64 rather than
// std::normal_distribution, whose algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw argument_error("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % n);
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double stddev) { return gaussian() * stddev; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Fills out with i.i.d. N(0, stddev^2) draws; stddev must be positive.
void fill_gaussian(Rng& rng, std::span<double> out, double stddev);

// rows x cols matrix of i.i.d. N(0, stddev^2) entries.
Matrix random_gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev);

}  // namespace ptn
