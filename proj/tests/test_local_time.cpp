#include "doctest.h"

#include <cmath>
#include <vector>

#include "brox/errors.hpp"
#include "brox/local_time.hpp"

using namespace brox;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("ramp path spends density one everywhere") {
  const double dt = 1e-3, eps = 0.05;
  SampledPath b;
  for (int k = 0; k <= 1000; ++k) {
    b.t.push_back(k * dt);
    b.value.push_back(k * dt);
  }
  const auto f = occupation_local_time(b, eps, {0.25, 0.5, 0.75}, {0.5, 1.0});
  // box kernel on left endpoints: 2 eps / dt + 1 sampled points fall in the window
  CHECK(f.at(1, std::size_t{1}) == doctest::Approx(1.0).epsilon(dt / eps));
  CHECK(f.at(0, std::size_t{0}) == doctest::Approx(1.0).epsilon(dt / eps));
  CHECK(f.at(0, std::size_t{2}) == 0.0);
}

TEST_CASE("occupation field properties on a Brownian path") {
  const TimeGrid g{0.0, 1e-5, 100000};
  const auto b = sample_brownian(g, GaussianStream(21, stream_id(0, Role::brownian)));
  const double eps = default_epsilon(g.dt);
  const auto y = linspace(-3.0, 3.0, 3001);
  const std::vector<double> stamps{0.25, 0.5, 0.75, 1.0};
  const auto f = occupation_local_time(b, eps, y, stamps);

  SUBCASE("non-negative and non-decreasing in time") {
    for (std::size_t m = 0; m < stamps.size(); ++m)
      for (std::size_t j = 0; j < y.size(); ++j) {
        REQUIRE(f.at(m, j) >= 0.0);
        if (m > 0) REQUIRE(f.at(m, j) >= f.at(m - 1, j) - 1e-12);
      }
  }
  SUBCASE("occupation time formula") {
    for (auto fn : {+[](double x) { return std::cos(x); }, +[](double x) { return x * x; }}) {
      double lhs = 0.0;
      for (std::size_t k = 0; k + 1 < b.size(); ++k) lhs += fn(b.value[k]) * g.dt;
      const double r = occupation_residual(b, f, fn, 1.0);
      CHECK(r < 5e-3 * std::max(1.0, std::abs(lhs)));
    }
  }
  SUBCASE("parallel kernel equals the serial reference") {
    const auto p = occupation_local_time_parallel(b, eps, y, stamps);
    for (std::size_t m = 0; m < stamps.size(); ++m)
      for (std::size_t j = 0; j < y.size(); ++j) REQUIRE(p.at(m, j) == doctest::Approx(f.at(m, j)).epsilon(1e-12).scale(1.0));
  }
  SUBCASE("increments and lookups") {
    CHECK(local_time_increment(f, 0.25, 1.0, 0.0) == doctest::Approx(f.at(3, 0.0) - f.at(0, 0.0)));
    CHECK_THROWS_AS(local_time_increment(f, 0.3, 1.0, 0.0), LookupError);
    CHECK(f.nearest_stamp(0.3) == 0);
    CHECK(f.nearest_stamp(0.9) == 3);
  }
}

TEST_CASE("stamp between grid points uses the partial step") {
  SampledPath b{{0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
  const auto f = occupation_local_time(b, 0.5, {0.0}, {0.5, 1.5, 2.0});
  CHECK(f.at(0, std::size_t{0}) == doctest::Approx(0.5));
  CHECK(f.at(1, std::size_t{0}) == doctest::Approx(1.5));
  CHECK(f.at(2, std::size_t{0}) == doctest::Approx(2.0));
  const auto p = occupation_local_time_parallel(b, 0.5, {0.0}, {0.5, 1.5, 2.0});
  CHECK(p.at(1, std::size_t{0}) == doctest::Approx(1.5));
}

TEST_CASE("Brox local time reduces to L_B in a flat environment") {
  const TimeGrid g{0.0, 1e-4, 10000};
  const auto b = sample_brownian(g, GaussianStream(3, stream_id(0, Role::brownian)));
  const auto env = environment_from_function(4.0, 1e-3, [](double) { return 0.0; });
  const auto v = full_view(env);
  const auto s = build_scale_function(v);
  const auto tc = build_time_change(s, b);
  const auto f = occupation_local_time(b, default_epsilon(g.dt), s.y(), {0.5, 1.0});
  for (double x : {-0.3, 0.0, 0.2})
    CHECK(brox_local_time(f, v, s, tc, 1.0, x) == doctest::Approx(f.at(1, x)).epsilon(1e-12));
}

TEST_CASE("invalid kernel inputs") {
  SampledPath b{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(occupation_local_time(b, 0.0, {0.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(occupation_local_time(b, 0.1, {0.0}, {2.0}), ExtentError);
}
