#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace kcac {

// Deterministic random stream. mt19937_64 has a standard-mandated output
// sequence, and the uniform/normal mappings below are written out by hand,
// so every draw is bit-identical across platforms and compilers.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1): top 53 bits of one draw.
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // i in [0, n), n >= 1: rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v = gen_();
    while (v > limit) v = gen_();
    return v % n;
  }

  // Standard normal via Box-Muller, one value per call (pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Stable sub-seed derivation: mixes a base seed with a role tag and an
// index so independent consumers (per-episode env, per-stage learner)
// get decorrelated but reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index) {
  std::uint64_t h = detail::splitmix64(base);
  for (char c : tag) {
    h = detail::splitmix64(h ^ static_cast<std::uint8_t>(c));
  }
  return detail::splitmix64(h ^ index);
}

}  // namespace kcac
