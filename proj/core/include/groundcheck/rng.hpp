#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace groundcheck {

/// Deterministic xoshiro256** generator with explicit, portable state.
///
/// Used everywhere randomness is needed (init, shuffles, dropout,
/// interventions) so that runs are reproducible across platforms and the
/// full state can be captured in checkpoints.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the xoshiro state.
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. No cached spare, so the state stays
  /// exactly four words.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::string save_state() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (const std::uint64_t word : state_) {
      for (int shift = 60; shift >= 0; shift -= 4) {
        out.push_back(digits[(word >> shift) & 0xF]);
      }
    }
    return out;
  }

  void load_state(const std::string& hex) {
    if (hex.size() != 64) throw std::invalid_argument("Rng state must be 64 hex chars");
    for (int w = 0; w < 4; ++w) {
      std::uint64_t word = 0;
      for (int i = 0; i < 16; ++i) {
        const char ch = hex[static_cast<std::size_t>(w * 16 + i)];
        word <<= 4;
        if (ch >= '0' && ch <= '9') word |= static_cast<std::uint64_t>(ch - '0');
        else if (ch >= 'a' && ch <= 'f') word |= static_cast<std::uint64_t>(ch - 'a' + 10);
        else throw std::invalid_argument("Rng state is not hex");
      }
      state_[static_cast<std::size_t>(w)] = word;
    }
  }

  /// Stateless FNV-1a (64-bit); used for config hashing and for deriving
  /// independent seeds from text.
  static std::uint64_t hash64(std::string_view text, std::uint64_t seed = 0) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (const char ch : text) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ull;
    }
    return h;
  }

  /// Mixes several integers into one seed (for per-cell RNG streams).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ull * (b + 1);
    return splitmix64(x);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace groundcheck
