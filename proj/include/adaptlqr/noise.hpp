#pragma once

// Counter-based randomness: every draw is a pure function of its key, so
// trajectories are reproducible regardless of how they are scheduled.

#include <cstdint>
#include <initializer_list>
#include <span>

namespace adaptlqr {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple.
constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Standard normal draws keyed by (seed, trajectory, step, component),
/// generated pairwise by Box–Muller.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t trajectory) : seed_(seed), trajectory_(trajectory) {}

  double normal(std::uint64_t step, std::uint64_t component) const;
  /// Fills out[c] = normal(step, c).
  void fill(std::uint64_t step, std::span<double> out) const;

 private:
  std::uint64_t seed_;
  std::uint64_t trajectory_;
};

}  // namespace adaptlqr
