// SPDX-License-Identifier: Apache-2.0
//
// Portable seeded pseudo-random generation. Every shuffle in the pipeline goes
// through this file so splits and subsets reproduce bit-for-bit on any
// platform and in any other implementation that follows the same constants.
//
//   seeding:   SplitMix64 (increment 0x9E3779B97F4A7C15, mixers
//              0xBF58476D1CE4E5B9 / 0x94D049BB133111EB, shifts 30/27/31)
//              produces the four state words of
//   generator: xoshiro256** (result = rotl(s1 * 5, 7) * 9; t = s1 << 17;
//              rotations 7 / 45).
//   bounded:   uniform integer in [0, n) by rejection on the low end:
//              threshold = (2^64 - n) mod n, draw r until r >= threshold,
//              return r mod n.
//   shuffle:   Fisher-Yates from the back; for i = n-1 .. 1 swap(i, bounded(i+1)).
//   double:    (next() >> 11) * 2^-53, uniform in [0, 1).

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scl {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();
  // Uniform in [0, n). n must be positive.
  std::uint64_t bounded(std::uint64_t n);
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t s_[4];
};

// In-place Fisher-Yates driven by `rng`.
void shuffle(std::vector<std::size_t>& v, Xoshiro256& rng);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace scl
