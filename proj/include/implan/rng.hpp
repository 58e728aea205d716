#pragma once

#include <cstdint>

namespace implan {

/// Splittable counter-seeded generator (SplitMix64 core).
///
/// A stream is addressed by (root seed, stream index), so sample i of
/// trajectory/episode j sees the same draws no matter how the work is
/// chunked across threads. All distributions are generated with explicit
/// arithmetic (no std:: distribution objects) so sequences are stable
/// across standard library implementations.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double next_double();
  /// Uniform in (0, 1).
  double next_open_double();
  /// Standard normal via Box-Muller.
  double next_normal();
  /// Exponential with the given mean (> 0).
  double next_exponential(double mean);
  /// Integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_ = 0x9e3779b97f4a7c15ull;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace implan
