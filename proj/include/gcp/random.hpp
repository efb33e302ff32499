//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Portable pseudo-random numbers. The standard <random> distributions are
// implementation defined, so every draw used by the library goes through
// this generator and its own samplers:
//
//   engine    xoshiro256** (Blackman & Vigna), state seeded by four
//             successive splitmix64 outputs of the 64-bit seed
//   uniform   top 53 bits of one output, times 2^-53, in [0, 1)
//   normal    Box-Muller on two uniforms (cosine branch only)
//   poisson   sequential inversion below rate 10, PTRS rejection above
//   gamma     Marsaglia-Tsang; shape < 1 boosted by U^(1/shape)

#include <cstddef>
#include <cstdint>
#include <limits>

namespace gcp {

class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  std::uint64_t poisson(double rate) noexcept;
  double gamma(double shape, double scale) noexcept;

private:
  std::uint64_t s_[4];
};

}  // namespace gcp
