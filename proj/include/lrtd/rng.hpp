#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lrtd {

// Deterministic RNG. mt19937_64 is bit-exact by the standard; the
// distributions are derived here by hand because std::*_distribution is
// implementation-defined and would break byte-identical reruns across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (spare discarded).
  double normal();

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);
  int uniform_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn from [0, n), in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 gen_;
};

// splitmix64-based mixing for deriving independent stream seeds.
std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_str(std::string_view s);

}  // namespace lrtd
