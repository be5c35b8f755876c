#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "mvlab/errors.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Philox4x32-10 (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent random streams addressed by counter.
enum class Stream : std::uint32_t {
  W = 1,             // per-particle Brownian motion carrying the Girsanov control
  WTilde = 2,        // per-particle measure-dependent noise (law-flow runs)
  SharedWTilde = 3,  // one W-tilde path per replica, common to coupled runs
  Initial = 4,       // initial-law sampling
  Jitter = 5,        // duplicate separation in k-NN estimates
  Resample = 6,      // index draws (replica starting points, subsampling)
  User = 7,
};

// Replayable noise: each variate is a pure function of
// (seed, stream, particle, step, replica). Increments on a grid of width h are
// sums of `refine` sub-increments of width h / refine, so plans with the same
// fine grid share one Brownian path.
class NoisePlan {
 public:
  NoisePlan() = default;
  NoisePlan(std::uint64_t seed, double h, double horizon, int refine = 1);

  std::uint64_t seed() const { return seed_; }
  double h() const { return h_; }
  double horizon() const { return horizon_; }
  long steps() const { return steps_; }
  int refine() const { return refine_; }

  // Same seed and fine grid, coarser step h * factor.
  NoisePlan coarsened(int factor) const;

  // Standard normals for the counter (stream, particle, index, replica).
  void normals(Stream s, std::uint64_t particle, std::uint64_t index, std::uint64_t replica,
               VecRef out) const;
  // Uniforms in (0, 1].
  void uniforms(Stream s, std::uint64_t particle, std::uint64_t index, std::uint64_t replica,
                VecRef out) const;
  // Brownian increment over step j, distributed N(0, h I).
  void increment(Stream s, std::uint64_t particle, long step, std::uint64_t replica, VecRef out) const;

  bool same_path(const NoisePlan& other) const {
    return seed_ == other.seed_ && h_ == other.h_ && refine_ == other.refine_;
  }

 private:
  Philox4x32::Key key() const;

  std::uint64_t seed_ = 0;
  double h_ = 0.0;
  double horizon_ = 0.0;
  long steps_ = 0;
  int refine_ = 1;
};

}  // namespace mvlab
