#pragma once

// Deterministic random streams.
//
// Everything downstream (samplers, experiment harness, optimizer restarts)
// assumes bit-identical reproducibility across platforms and across thread
// schedules. std::mt19937 would give us portable integers but the standard
// distributions are not bit-portable, so we keep the whole path explicit:
// xoshiro256++ for the raw stream, splitmix64 for seeding and for deriving
// independent child streams keyed by (master seed, purpose tag, indices),
// and Box-Muller built directly on the 53-bit uniforms for gaussians.
// Deriving a child per work item makes results independent of execution
// order: worker threads never share a stream.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace ppcaq {

// splitmix64 step: advances `state` and returns the next output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Collapses (master seed, purpose tag, two indices) into a single seed.
// Used to key child streams per logical task so that parallel execution
// and serial execution consume randomness identically.
inline std::uint64_t derive_seed(std::uint64_t master_seed,
                                 std::string_view purpose,
                                 std::uint64_t index0 = 0,
                                 std::uint64_t index1 = 0) {
  std::uint64_t state = master_seed ^ fnv1a64(purpose);
  std::uint64_t h = splitmix64_next(state);
  state ^= index0 + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64_next(state);
  state ^= index1 + 0xbf58476d1ce4e5b9ULL;
  h ^= splitmix64_next(state);
  return h;
}

// xoshiro256++ stream with a Box-Muller gaussian on top.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64_next(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double uniform01_open() {
    return double((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; caches the second variate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01_open()));
    const double angle = 2.0 * std::numbers::pi * uniform01();
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RngStream derive_stream(std::uint64_t master_seed,
                               std::string_view purpose,
                               std::uint64_t index0 = 0,
                               std::uint64_t index1 = 0) {
  return RngStream(derive_seed(master_seed, purpose, index0, index1));
}

}  // namespace ppcaq
