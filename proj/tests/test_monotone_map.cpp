#include "doctest.h"

#include <cmath>
#include <vector>

#include "brox/errors.hpp"
#include "brox/monotone_map.hpp"

using namespace brox;

namespace {

// Trapezoid rule on a very fine grid: an independent route to int_0^x e^{W}.
double trapezoid_scale(const PolygonalEnvironment& v, double x, double node_step) {
  // 100 trapezoid panels per environment segment, aligned with the kinks
  const int n = static_cast<int>(std::lround(std::abs(x) / node_step)) * 100;
  const double h = x / n;
  double s = 0.5 * (std::exp(v(0.0)) + std::exp(v(x)));
  for (int i = 1; i < n; ++i) s += std::exp(v(i * h));
  return s * h;
}

}  // namespace

TEST_CASE("scale function of the flat environment is the identity") {
  const auto env = environment_from_function(3.0, 1e-2, [](double) { return 0.0; });
  const auto s = build_scale_function(full_view(env));
  for (double x : {-2.5, -1.0, 0.0, 0.37, 1.0, 3.0}) CHECK(s(x) == doctest::Approx(x).epsilon(1e-14));
  CHECK(s.invert(1.234) == doctest::Approx(1.234).epsilon(1e-14));
}

TEST_CASE("scale function for W(x) = x") {
  const auto env = environment_from_function(2.0, 1e-2, [](double x) { return x; });
  const auto s = build_scale_function(full_view(env));
  CHECK(s(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
  CHECK(s(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-13));
  CHECK(s.invert(std::exp(1.0) - 1.0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("scale function of a Brownian environment") {
  const auto env = sample_environment(3.0, 1e-3, EnvironmentStreams::for_replica(2, 0));
  const auto v = full_view(env);
  const auto s = build_scale_function(v);

  SUBCASE("agrees with an independent trapezoid rule") {
    for (double x : {-2.0, -0.5, 0.7, 2.5}) CHECK(s(x) == doctest::Approx(trapezoid_scale(v, x, 1e-3)).epsilon(1e-7));
  }
  SUBCASE("round trips") {
    for (double x = -2.9; x < 2.9; x += 0.0137) {
      CHECK(s.invert(s(x)) == doctest::Approx(x).epsilon(1e-12).scale(1.0));
      const double y = s(x);
      CHECK(s(s.invert(y)) == doctest::Approx(y).epsilon(1e-12).scale(1.0));
    }
  }
  SUBCASE("hinted inversion equals plain inversion") {
    std::size_t seg = 0;
    for (double x = -2.9; x < 2.9; x += 0.0011) CHECK(s.invert(s(x), seg) == s.invert(s(x)));
  }
  SUBCASE("monotone and anchored") {
    CHECK(s(0.0) == 0.0);
    for (std::size_t i = 1; i < s.y().size(); ++i) REQUIRE(s.y()[i] > s.y()[i - 1]);
    CHECK(s.log_slope(0.5, s.segment_of_x(0.5)) == doctest::Approx(v(0.5)));
  }
  SUBCASE("domain and range errors") {
    CHECK_THROWS_AS(s(3.5), ExtentError);
    CHECK_THROWS_AS(s.invert(s.y_max() + 1.0), RangeError);
  }
}

TEST_CASE("linear maps") {
  const auto m = MonotoneMap::linear({0.0, 1.0, 2.0}, {0.0, 2.0, 2.5}, MapDomain::time);
  CHECK(m(0.5) == doctest::Approx(1.0));
  CHECK(m(1.5) == doctest::Approx(2.25));
  CHECK(m.invert(2.25) == doctest::Approx(1.5));
  CHECK_THROWS_AS(MonotoneMap::linear({0.0, 1.0}, {1.0, 1.0}, MapDomain::time), ConfigError);
}

TEST_CASE("time change") {
  const TimeGrid g{0.0, 1e-3, 1000};
  const auto b = sample_brownian(g, GaussianStream(4, stream_id(0, Role::brownian)));
  SUBCASE("flat environment gives the identity clock") {
    const auto env = environment_from_function(5.0, 1e-3, [](double) { return 0.0; });
    const auto s = build_scale_function(full_view(env));
    const auto tc = build_time_change(s, b);
    for (std::size_t k = 0; k < b.size(); k += 50) CHECK(tc(b.t[k]) == doctest::Approx(b.t[k]).epsilon(1e-12));
    CHECK(tc(0.0) == 0.0);
  }
  SUBCASE("W(x) = x gives the clock (1 + B)^{-2}") {
    SampledPath b;
    for (int k = 0; k <= 1000; ++k) {
      b.t.push_back(k * 1e-3);
      b.value.push_back(0.4 * std::sin(7.0 * k * 1e-3));
    }
    const auto env = environment_from_function(5.0, 1e-3, [](double x) { return x; });
    const auto s = build_scale_function(full_view(env));
    const auto tc = build_time_change(s, b);
    double ref = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) ref += std::pow(1.0 + b.value[k], -2.0) * 1e-3;
    CHECK(tc(1.0) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("stopping radius") {
  const auto env = environment_from_function(5.0, 1e-2, [](double) { return 0.0; });
  const auto s = build_scale_function(full_view(env));
  SampledPath b{{0.0, 0.5, 1.0}, {0.0, 0.73, -0.2}};
  const auto r = stopping_radius(s, b, 1.0);
  CHECK(r.b_sup == doctest::Approx(0.73));
  CHECK(r.radius == doctest::Approx(0.74));
  CHECK(stopping_radius(s, b, 0.0).radius == doctest::Approx(0.01));

  SampledPath far{{0.0, 1.0}, {0.0, 7.0}};
  CHECK_THROWS_AS(stopping_radius(s, far, 1.0), ExtentError);
  auto grown = sample_environment(1.0, 1e-2, EnvironmentStreams::for_replica(1, 0));
  SampledPath mid{{0.0, 1.0}, {0.0, 3.0}};
  const auto r2 = stopping_radius(grown, mid, 1.0);
  const auto s2 = build_scale_function(full_view(grown));
  CHECK(s2(r2.radius) > 3.0);
  CHECK(s2(-r2.radius) < -3.0);
}
