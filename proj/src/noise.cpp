#include "adaptlqr/noise.hpp"

#include <cmath>
#include <numbers>

namespace adaptlqr {

namespace {

// Uniform on (0, 1]: top 53 bits, shifted off zero so the log is finite.
double unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

void box_muller(std::uint64_t key, double& z0, double& z1) {
  const double u1 = unit_open(splitmix64(key));
  const double u2 = unit_open(splitmix64(key ^ 0xd1b54a32d192ed03ULL));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(t);
  z1 = r * std::sin(t);
}

}  // namespace

double GaussianStream::normal(std::uint64_t step, std::uint64_t component) const {
  double z0 = 0.0;
  double z1 = 0.0;
  box_muller(hash_key({seed_, trajectory_, step, component / 2}), z0, z1);
  return component % 2 == 0 ? z0 : z1;
}

void GaussianStream::fill(std::uint64_t step, std::span<double> out) const {
  for (std::size_t c = 0; c < out.size(); c += 2) {
    double z0 = 0.0;
    double z1 = 0.0;
    box_muller(hash_key({seed_, trajectory_, step, c / 2}), z0, z1);
    out[c] = z0;
    if (c + 1 < out.size()) out[c + 1] = z1;
  }
}

}  // namespace adaptlqr
