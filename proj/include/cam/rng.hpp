#ifndef CAM_RNG_HPP_
#define CAM_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace cam {

/// splitmix64 step; used only to expand seeds into xoshiro state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** (Blackman/Vigna). All randomness in this project flows
/// through this generator so that a (seed, stream) pair means the same
/// sequence in any implementation of the same recipe.
///
/// Stream discipline: the state is the first four outputs of splitmix64
/// seeded with  seed + (stream + 1) * 0x9E3779B97F4A7C15  (wrapping).
/// Stream ids are composed as  purpose | index  with the purpose constants
/// below, e.g. the few-shot split for class c draws from stream
/// kStreamSplit | c.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next() {
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

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) via modulo (documented; the tiny modulo bias
  /// is irrelevant here and keeps the recipe portable).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Standard normal via Box-Muller; generates pairs, caches the second.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream purpose constants. The low 32 bits carry the per-class / per-head /
// per-epoch index.
inline constexpr std::uint64_t kStreamSplit = 0x1ULL << 32;       // | class
inline constexpr std::uint64_t kStreamGenMean = 0x2ULL << 32;     // | class
inline constexpr std::uint64_t kStreamGenCov = 0x3ULL << 32;      // | class
inline constexpr std::uint64_t kStreamGenSample = 0x4ULL << 32;   // | class
inline constexpr std::uint64_t kStreamInit = 0x5ULL << 32;        // | class*M+head
inline constexpr std::uint64_t kStreamShuffle = 0x6ULL << 32;     // | epoch

}  // namespace cam

#endif  // CAM_RNG_HPP_
