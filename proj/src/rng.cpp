#include "brox/rng.hpp"

#include <cmath>
#include <numbers>

namespace brox {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in the open interval (0,1).
inline double to_unit(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::uint64_t stream_id(std::uint64_t replica, Role role) {
  return (replica << 8) | static_cast<std::uint64_t>(role);
}

std::array<double, 2> GaussianStream::pair(std::uint64_t block) const {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto w = philox4x32(ctr, key);
  const double u1 = to_unit(w[0], w[1]);
  const double u2 = to_unit(w[2], w[3]);
  // Box-Muller
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double GaussianStream::normal(std::uint64_t index) const {
  return pair(index >> 1)[index & 1u];
}

void GaussianStream::fill(std::uint64_t first, std::span<double> out) const {
  std::size_t i = 0;
  std::uint64_t idx = first;
  if ((idx & 1u) && i < out.size()) {
    out[i++] = pair(idx >> 1)[1];
    ++idx;
  }
  for (; i + 1 < out.size(); i += 2, idx += 2) {
    const auto p = pair(idx >> 1);
    out[i] = p[0];
    out[i + 1] = p[1];
  }
  if (i < out.size()) out[i] = pair(idx >> 1)[0];
}

double GaussianStream::uniform(std::uint64_t index) const {
  const std::uint64_t block = index | (std::uint64_t{1} << 63);
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const auto w = philox4x32(ctr, {static_cast<std::uint32_t>(seed_),
                                  static_cast<std::uint32_t>(seed_ >> 32)});
  return to_unit(w[0], w[1]);
}

}  // namespace brox
