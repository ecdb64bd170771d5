#pragma once
// Deterministic random number generation: xoshiro256** seeded through
// SplitMix64, with labeled stream derivation so every training stage, every
// dataset draw, and every ensemble member reads an independent, reproducible
// stream.
//
// Stream layout: a generator remembers the seed it was constructed from;
// derive(label) hashes that seed together with the label (FNV-1a) and mixes
// the result through SplitMix64. Derived streams therefore depend only on the
// (root seed, label path) pair, never on how many values the parent has
// already produced.
//
// Normal variates use Box-Muller on our own uniform bits rather than
// std::normal_distribution, whose output differs across standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace densreg {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  uint64_t derive_seed(std::string_view label) const {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a offset basis
    for (char ch : label) {
      h ^= uint64_t(uint8_t(ch));
      h *= 0x100000001b3ull;
    }
    uint64_t mixed = seed_ ^ h;
    return splitmix64(mixed);
  }

  Rng derive(std::string_view label) const { return Rng(derive_seed(label)); }

  uint64_t seed() const { return seed_; }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_;
  std::array<uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by our own generator (std::shuffle's draw
// pattern is implementation-defined).
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = size_t(rng.next() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace densreg
