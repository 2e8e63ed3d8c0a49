#include "orfnet/sampling.hpp"

#include <cmath>
#include <numbers>

#include "orfnet/error.hpp"

namespace orfnet {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t agent_id)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(agent_id * 0xD1B54A32D192ED03ULL +
                                                0x632BE59BD9B4E019ULL))) {}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::next_uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

void RngStream::next_gaussian_pair(double& a, double& b) noexcept {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  a = r * std::cos(theta);
  b = r * std::sin(theta);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 0x8CB92BA72F3D8DD7ULL));
}

Vector sample_unit_sphere(int d, RngStream& rng) {
  if (d < 1) throw_invalid("sphere dimension must be >= 1");
  Vector g(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int k = 0; k < d; k += 2) {
      double a = 0.0;
      double b = 0.0;
      rng.next_gaussian_pair(a, b);
      g(k) = a;
      if (k + 1 < d) g(k + 1) = b;
    }
    norm = g.norm();
  }
  return g / norm;
}

}  // namespace orfnet
