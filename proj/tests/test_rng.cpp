#include "doctest.h"

#include <cmath>
#include <vector>

#include "brox/rng.hpp"

using namespace brox;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors distributed with the Random123 library.
  auto r = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(r[0] == 0x6627e8d5u);
  CHECK(r[1] == 0xe169c58du);
  CHECK(r[2] == 0xbc57ac4cu);
  CHECK(r[3] == 0x9b00dbd8u);
  r = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(r[0] == 0x408f276du);
  CHECK(r[1] == 0x41c83b0eu);
  CHECK(r[2] == 0xa20bc7c6u);
  CHECK(r[3] == 0x6d5451fdu);
  r = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(r[0] == 0xd16cfe09u);
  CHECK(r[1] == 0x94fdccebu);
  CHECK(r[2] == 0x5001e420u);
  CHECK(r[3] == 0x24126ea1u);
}

TEST_CASE("normals are a pure function of (seed, stream, index)") {
  GaussianStream a(7, stream_id(3, Role::brownian)), b(7, stream_id(3, Role::brownian));
  GaussianStream c(7, stream_id(4, Role::brownian)), d(8, stream_id(3, Role::brownian));
  for (std::uint64_t k = 0; k < 20; ++k) {
    CHECK(a.normal(k) == b.normal(k));
    CHECK(a.normal(k) != c.normal(k));
    CHECK(a.normal(k) != d.normal(k));
  }
  std::vector<double> block(11);
  a.fill(5, block);
  for (std::size_t i = 0; i < block.size(); ++i) CHECK(block[i] == a.normal(5 + i));
}

TEST_CASE("normal moments") {
  GaussianStream g(123, 0);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int k = 0; k < n; ++k) {
    const double z = g.normal(static_cast<std::uint64_t>(k));
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("uniforms lie in the open unit interval") {
  GaussianStream g(1, 2);
  double s = 0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double u = g.uniform(k);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / 10000 - 0.5) < 0.02);
}
