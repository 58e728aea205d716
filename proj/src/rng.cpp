#include "implan/rng.hpp"

#include <cmath>

namespace implan {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31u);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  state_ = mix(seed + kGolden * (stream + 1)) ^ mix(stream + kGolden);
  if (state_ == 0) {
    state_ = kGolden;
  }
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix(state_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
}

double RngStream::next_open_double() {
  return (static_cast<double>(next_u64() >> 11u) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = next_open_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double RngStream::next_exponential(double mean) {
  return -mean * std::log(next_open_double());
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  // Modulo bias is irrelevant for the small n used here.
  return n == 0 ? 0 : next_u64() % n;
}

}  // namespace implan
