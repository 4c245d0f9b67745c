#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace sgr {

// splitmix64 finalizer, used to derive independent stream seeds from a master
// seed plus a path of integers.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG with a fixed normal-variate algorithm (Box-Muller) so that
// golden-file tests are independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t derive_seed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t p : path) s = mix64(s ^ mix64(p));
    return s;
  }

  static Rng derive(std::uint64_t master,
                    std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in {0, ..., n-1}.
  std::uint64_t uniform_int(std::uint64_t n) {
    return eng_() % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sgr
