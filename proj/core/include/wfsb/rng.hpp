#pragma once

#include <cmath>
#include <cstdint>

namespace wfsb {

/// SplitMix64 finalizer. Bijective on 64-bit words; used for seeding and
/// for deriving independent substream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic substream key for (master seed, replicate, coordinate).
/// Any path/coordinate is reproducible in isolation from these three values;
/// the result does not depend on how replicates are scheduled across threads.
constexpr std::uint64_t substream_key(std::uint64_t master, std::uint64_t replicate,
                                      std::uint64_t coordinate) noexcept {
  std::uint64_t k = mix64(master);
  k = mix64(k ^ (0x9e3779b97f4a7c15ULL * (replicate + 1)));
  k = mix64(k ^ (0xd1b54a32d192ed03ULL * (coordinate + 1)));
  return k;
}

/// xoshiro256++ (Blackman/Vigna, public domain), seeded through SplitMix64.
/// Chosen over std::mt19937_64 so that streams are bit-reproducible across
/// standard library implementations and fast enough for 1e10-step runs.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() noexcept {
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

  /// Uniform double in [0,1), 53-bit resolution.
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0,1]; safe argument for log().
  double uniform01_open_left() noexcept {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Exponential with the given rate (rate > 0).
  double exponential(double rate) noexcept { return -std::log(uniform01_open_left()) / rate; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Standard normal sampler (Marsaglia polar method, second deviate cached).
/// Tracks how many normals were handed out so callers can account for
/// stream consumption per coordinate.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) noexcept : rng_(seed) {}

  double operator()() noexcept {
    ++count_;
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * rng_.uniform01() - 1.0;
      v = 2.0 * rng_.uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    have_cached_ = true;
    return u * f;
  }

  std::uint64_t draws() const noexcept { return count_; }

 private:
  Xoshiro256 rng_;
  double cached_ = 0.0;
  bool have_cached_ = false;
  std::uint64_t count_ = 0;
};

}  // namespace wfsb
