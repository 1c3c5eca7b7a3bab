// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace voxtrack {

/// PCG32 (XSH-RR 64/32, O'Neill 2014).
///
/// Chosen over std::mt19937 because the output sequence is fixed by the
/// algorithm rather than a library implementation, so fixtures generated
/// here can be reproduced byte-for-byte by reimplementations in other
/// languages. `stream` selects an independent sequence; the simulator
/// derives one stream per frame so that parallel or out-of-order frame
/// rendering can never change what is sampled.
class Pcg32 {
 public:
  explicit Pcg32(uint64_t seed, uint64_t stream = 0) { reseed(seed, stream); }

  void reseed(uint64_t seed, uint64_t stream) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    auto xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  /// Uniform in [0, 1) with 32-bit resolution.
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be > 0 and far below 2^32.
  uint32_t below(uint32_t n) {
    return static_cast<uint32_t>((uint64_t{next_u32()} * n) >> 32);
  }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per call,
  /// so draw counts are stable regardless of the values sampled.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
};

}  // namespace voxtrack
