#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "brox/errors.hpp"
#include "brox/strong.hpp"

using namespace brox;

namespace {

constexpr std::uint64_t kSeed = 777;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// calB on a uniform grid built from a fine B.
BroxRealization reference(const EnvironmentSource& src, std::uint64_t replica, double dt) {
  return simulate_brox(src, PartitionRule::grid(), GaussianStream(kSeed, stream_id(replica, Role::brownian)),
                       TimeGrid::covering(1.0, dt));
}

}  // namespace

TEST_CASE("flat environment: every map is the identity") {
  const auto src = function_environment(0.01, [](double) { return 0.0; });
  const auto r = reference(src, 0, 1e-3);
  const auto sol = solve_m(src, r.calb);
  CHECK(sol.m.value.front() == 0.0);
  for (std::size_t j = 0; j < sol.m.size(); ++j) REQUIRE(std::abs(sol.m.value[j] - r.calb.value[j]) < 1e-12);
  const auto scale = build_scale_function(full_view(src(sol.k_trunc)));
  const auto tc = compute_tau_and_b(sol, scale);
  CHECK(tc.tau(0.0) == 0.0);
  for (std::size_t j = 0; j < tc.b.size(); j += 11) {
    REQUIRE(tc.b.t[j] == doctest::Approx(sol.m.t[j]).epsilon(1e-12));
    REQUIRE(tc.b.value[j] == sol.m.value[j]);
  }
  const auto x = strong_path(scale, sol);
  for (std::size_t j = 0; j < x.size(); ++j) REQUIRE(std::abs(x.value[j] - r.calb.value[j]) < 1e-12);
  const auto rt = roundtrip_error(src, r.b, TimeGrid::covering(1.0, 1e-3));
  CHECK(rt.sup_x_error < 1e-12);
  CHECK(rt.sup_b_error < 1e-12);
}

TEST_CASE("truncation escalation") {
  const auto src = brownian_environment(EnvironmentStreams::for_replica(kSeed, 1), 0.01);
  const auto r = reference(src, 1, 1e-4);
  StrongOptions small;
  small.k_trunc = 0.05;
  StrongOptions large;
  large.k_trunc = 16.0;
  const auto a = solve_m(src, r.calb, small);
  const auto b = solve_m(src, r.calb, large);
  CHECK(a.escalations > 0);
  CHECK(b.escalations == 0);
  CHECK(a.k_trunc == doctest::Approx(0.05 * std::ldexp(1.0, a.escalations)));
  // the clamp never acts on a value inside the current window, so the paths coincide
  CHECK(a.m.value == b.m.value);

  StrongOptions none;
  none.k_trunc = 0.02;
  none.max_escalations = 0;
  CHECK_THROWS_AS(solve_m(src, r.calb, none), ResourceError);
  none.k_trunc = -1.0;
  CHECK_THROWS_AS(solve_m(src, r.calb, none), ConfigError);
}

TEST_CASE("time change of the auxiliary solution") {
  const auto src = brownian_environment(EnvironmentStreams::for_replica(kSeed, 2), 0.01);
  const auto r = reference(src, 2, 1e-5);
  const auto sol = solve_m(src, r.calb);
  const auto scale = build_scale_function(full_view(src(std::max(sol.k_trunc, 4.0))));
  const auto tc = compute_tau_and_b(sol, scale);
  for (double t : {0.1, 0.5, 0.9})
    CHECK(tc.tau(tc.u(t)) == doctest::Approx(t).epsilon(1e-12));
  // Levy check: B = M o tau accumulates quadratic variation at unit rate in its own clock
  const double u_end = tc.b.t.back();
  CHECK(realized_qv(tc.b, u_end) == doctest::Approx(u_end).epsilon(0.03));
}

TEST_CASE("roundtrip errors shrink with the step") {
  SUBCASE("smooth environment") {
    const auto src = function_environment(0.001, [](double x) { return std::sin(x); });
    const auto r = reference(src, 3, 1e-6);
    const double coarse = roundtrip_error(src, r.b, TimeGrid::covering(1.0, 1e-3)).sup_x_error;
    const double fine = roundtrip_error(src, r.b, TimeGrid::covering(1.0, 1e-5)).sup_x_error;
    CHECK(fine < 0.2 * coarse);
    CHECK(fine < 0.01);
  }
  SUBCASE("Brownian environment, median over seeds") {
    std::vector<double> e3, e5;
    for (std::uint64_t rep = 0; rep < 8; ++rep) {
      const auto src = brownian_environment(EnvironmentStreams::for_replica(kSeed, rep), 0.01);
      const auto r = reference(src, rep, 1e-6);
      e3.push_back(roundtrip_error(src, r.b, TimeGrid::covering(1.0, 1e-3)).sup_x_error);
      e5.push_back(roundtrip_error(src, r.b, TimeGrid::covering(1.0, 1e-5)).sup_x_error);
    }
    CHECK(median(e5) < median(e3));
  }
}

TEST_CASE("self-refinement of the Euler scheme") {
  std::vector<double> d1, d2;
  for (std::uint64_t rep = 0; rep < 8; ++rep) {
    const auto src = brownian_environment(EnvironmentStreams::for_replica(kSeed, rep), 0.01);
    const auto r = reference(src, rep, 1.5625e-5);  // 64000 steps
    auto coarsen = [&](std::size_t stride) {
      SampledPath p;
      for (std::size_t j = 0; j < r.calb.size(); j += stride) {
        p.t.push_back(r.calb.t[j]);
        p.value.push_back(r.calb.value[j]);
      }
      return solve_m(src, p).m;
    };
    const auto m16 = coarsen(16), m4 = coarsen(4), m1 = coarsen(1);
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < m16.size(); ++j) {
      a = std::max(a, std::abs(m16.value[j] - m4.value[4 * j]));
      b = std::max(b, std::abs(m4.value[4 * j] - m1.value[16 * j]));
    }
    d1.push_back(a);
    d2.push_back(b);
  }
  CHECK(median(d2) < median(d1));
}
