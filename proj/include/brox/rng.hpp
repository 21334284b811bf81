#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace brox {

/// Philox4x32-10 block function. Counter and key are the raw 128/64-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Roles distinguish independent random inputs belonging to one replica.
enum class Role : std::uint32_t {
  brownian = 1,
  env_positive = 2,
  env_negative = 3,
  driving = 4,
  monte_carlo = 5,
};

/// Stream identifier: (replica, role) folded into a 64-bit word.
std::uint64_t stream_id(std::uint64_t replica, Role role);

/// Counter-based standard normal source.
///
/// The k-th normal is a pure function of (seed, stream, k), so a path can be
/// extended or re-generated piecewise without changing earlier values.
class GaussianStream {
 public:
  GaussianStream() = default;
  GaussianStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double normal(std::uint64_t index) const;
  /// Fills out[i] with normal(first + i).
  void fill(std::uint64_t first, std::span<double> out) const;

  /// Uniform in (0,1), indexed independently of the normals (upper half of the counter space).
  double uniform(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::array<double, 2> pair(std::uint64_t block) const;

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace brox
