#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace latentpose {

/// Seeded random stream with a fixed, platform-independent sample sequence.
///
/// Raw bits come from std::mt19937_64, whose output sequence is pinned by the
/// standard. Everything layered on top is implemented here rather than taken
/// from <random> distributions, whose algorithms are unspecified:
///  - uniform(): top 53 bits of one draw scaled by 2^-53, range [0, 1).
///  - uniform_index(n): rejection sampling on 64-bit draws (unbiased).
///  - normal(): Box-Muller, polar-free form; the sine branch is cached and
///    returned by the next call.
///  - substream(i): seed of child stream i is splitmix64(seed ^ splitmix64(i)).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  /// Raw 64-bit draws consumed so far.
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi);
  std::size_t uniform_index(std::size_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  RngStream substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace latentpose
