#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "brox/errors.hpp"
#include "brox/path.hpp"

using namespace brox;

TEST_CASE("brownian path on a uniform grid") {
  const TimeGrid g{0.0, 1e-3, 1000};
  const auto b = sample_brownian(g, GaussianStream(1, stream_id(0, Role::brownian)));
  REQUIRE(b.size() == 1001);
  CHECK(b.value[0] == 0.0);
  CHECK(b.t[1000] == doctest::Approx(1.0));

  SUBCASE("forced zero increment") {
    const TimeGrid one{0.0, 1.0, 1};
    const std::vector<double> z{0.0};
    const auto p = brownian_from_increments(one, z);
    CHECK(p.value == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("invalid grid") {
    CHECK_THROWS_AS(sample_brownian(TimeGrid{0.0, 0.0, 10}, GaussianStream()), ConfigError);
    CHECK_THROWS_AS(sample_brownian(TimeGrid{0.0, 1e-3, 0}, GaussianStream()), ConfigError);
  }
}

TEST_CASE("brownian quadratic variation and variance") {
  const TimeGrid g{0.0, 1e-4, 10000};
  double qv_worst = 0.0, s2 = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto b = sample_brownian(g, GaussianStream(11, stream_id(r, Role::brownian)));
    double qv = 0.0;
    for (std::size_t k = 1; k < b.size(); ++k) qv += (b.value[k] - b.value[k - 1]) * (b.value[k] - b.value[k - 1]);
    qv_worst = std::max(qv_worst, std::abs(qv - 1.0));
    s2 += b.value.back() * b.value.back();
  }
  // sd of the QV is sqrt(2 dt) ~ 0.014; 5 sd over 400 replicas
  CHECK(qv_worst < 0.075);
  CHECK(std::abs(s2 / reps - 1.0) < 4.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("sampled path interpolation") {
  SampledPath p{{0.0, 1.0, 3.0}, {0.0, 2.0, 0.0}};
  CHECK(p.at(0.5) == doctest::Approx(1.0));
  CHECK(p.at(2.0) == doctest::Approx(1.0));
  CHECK(p.at(3.0) == 0.0);
  CHECK_THROWS_AS(p.at(3.5), ExtentError);
  std::size_t hint = 0;
  CHECK(p.at(2.5, hint) == doctest::Approx(0.5));
  CHECK(hint == 1);
}

TEST_CASE("two-sided environment") {
  const auto streams = EnvironmentStreams::for_replica(5, 0);
  const auto env = sample_environment(1.0, 1e-3, streams);
  CHECK(env.at_index(0) == 0.0);
  CHECK(env.n_pos() == 1000);
  CHECK(env.n_neg() == 1000);
  CHECK(env(0.0) == 0.0);

  SUBCASE("h equal to the window gives three values") {
    const auto e = sample_environment(1.0, 1.0, streams);
    CHECK(e.size() == 3);
  }
  SUBCASE("h larger than the window") { CHECK_THROWS_AS(sample_environment(1.0, 2.0, streams), ConfigError); }
  SUBCASE("extension is prefix stable and composes") {
    const auto two = extend_environment(extend_environment(env, 2.0), 4.0);
    const auto one = extend_environment(env, 4.0);
    const auto direct = sample_environment(4.0, 1e-3, streams);
    REQUIRE(two.n_pos() == 4000);
    for (std::int64_t i = -4000; i <= 4000; i += 7) {
      CHECK(two.at_index(i) == one.at_index(i));
      CHECK(two.at_index(i) == direct.at_index(i));
    }
    for (std::int64_t i = -1000; i <= 1000; ++i) REQUIRE(two.at_index(i) == env.at_index(i));
    const auto same = extend_environment(env, 1.0);
    CHECK(same.positive() == env.positive());
    CHECK_THROWS_AS(extend_environment(env, 0.5), ConfigError);
  }
  SUBCASE("outside the window") { CHECK_THROWS_AS(env(1.5), ExtentError); }
}

TEST_CASE("environment increments have variance h") {
  const double h = 1e-2;
  double s = 0.0;
  int n = 0;
  for (int r = 0; r < 50; ++r) {
    const auto e = sample_environment(10.0, h, EnvironmentStreams::for_replica(9, r));
    for (std::int64_t i = -e.n_neg(); i < e.n_pos(); ++i) {
      const double d = e.at_index(i + 1) - e.at_index(i);
      s += d * d;
      ++n;
    }
  }
  CHECK(s / n / h == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("polygonal interpolation") {
  const auto env = sample_environment(2.0, 1e-2, EnvironmentStreams::for_replica(3, 1));
  SUBCASE("partition equal to the grid reproduces W") {
    const auto v = full_view(env);
    for (std::int64_t i = -200; i <= 200; ++i) CHECK(v(i * 1e-2) == env.at_index(i));
  }
  SUBCASE("uniform partition agrees at nodes and is linear in between") {
    const auto p = uniform_partition(1e-2, 0.25, -2.0, 2.0);
    CHECK(p.mesh() == doctest::Approx(0.25));
    const auto v = interpolate_polygonal(env, p);
    for (double x : p.nodes) CHECK(v(x) == doctest::Approx(env(x)).epsilon(1e-12));
    const double mid = 0.125;
    CHECK(v(mid) == doctest::Approx(0.5 * (env(0.0) + env(0.25))));
    CHECK(v.derivative(0.1) == doctest::Approx((env(0.25) - env(0.0)) / 0.25));
  }
  SUBCASE("two-node partition is a chord") {
    Partition p{{-1.0, 1.0}};
    const auto v = interpolate_polygonal(env, p);
    CHECK(v(0.0) == doctest::Approx(0.5 * (env(-1.0) + env(1.0))));
  }
  SUBCASE("nodes off the grid are rejected") {
    Partition p{{-1.0, 0.005, 1.0}};
    CHECK_THROWS_AS(interpolate_polygonal(env, p), ConfigError);
  }
  SUBCASE("sup |W_pi - W| shrinks with the mesh") {
    auto gap = [&](double mesh) {
      const auto v = interpolate_polygonal(env, uniform_partition(1e-2, mesh, -2.0, 2.0));
      double g = 0.0;
      for (std::int64_t i = -200; i <= 200; ++i) g = std::max(g, std::abs(v(i * 1e-2) - env.at_index(i)));
      return g;
    };
    CHECK(gap(0.04) <= gap(0.5));
    CHECK(gap(0.01) == 0.0);
  }
}

TEST_CASE("holder norm") {
  std::vector<double> x, f;
  for (int i = 0; i <= 100; ++i) {
    x.push_back(i / 100.0);
    f.push_back(i / 100.0);
  }
  CHECK(holder_norm(x, f, 0.5, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK(holder_norm(x, f, 0.5, 0.0, 0.5) <= holder_norm(x, f, 0.5, 0.0, 1.0));
  CHECK_THROWS_AS(holder_norm(x, f, 0.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("csv output is stable") {
  SampledPath p{{0.0, 0.5}, {0.0, 0.1}};
  std::ostringstream a, b;
  write_csv(a, p);
  write_csv(b, p);
  CHECK(a.str() == b.str());
  CHECK(a.str() == "t,value\n0,0\n0.5,0.10000000000000001\n");
}
