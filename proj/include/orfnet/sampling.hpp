#pragma once

#include <cstdint>

#include "orfnet/linalg.hpp"

namespace orfnet {

/// Counter-based random stream. Draw k of the stream keyed by
/// (seed, agent_id) is a pure function of (seed, agent_id, k), so a per-agent
/// stream gives the same values whether agents are simulated sequentially or
/// on separate workers. A stream must have a single consumer.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t agent_id);

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double next_uniform() noexcept;
  /// Standard normal pair via Box-Muller; consumes two draws.
  void next_gaussian_pair(double& a, double& b) noexcept;

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Per-repetition seed derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Uniform draw on the unit sphere in R^d (normalized Gaussian). For d = 1
/// this is +1 or -1.
Vector sample_unit_sphere(int d, RngStream& rng);

}  // namespace orfnet
