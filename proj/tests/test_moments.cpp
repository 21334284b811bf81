#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "brox/errors.hpp"
#include "brox/moments.hpp"
#include "brox/rng.hpp"

using namespace brox;

namespace {

// Plain midpoint product rule on a uniform grid of the simplex; slow but independent of the
// adaptive nested code. Used only for small m.
double midpoint_kac2(double u1, double u2, double xi, double eta, int n) {
  // E[(L(eta,u1)-L(xi,u1))(L(eta,u2)-L(xi,u2))] with s = xi + v^2 on both legs.
  double total = 0.0;
  for (int perm = 0; perm < 2; ++perm) {
    const double a = perm ? u2 : u1, b = perm ? u1 : u2;
    const double v1max = std::sqrt(eta - xi);
    const double h1 = v1max / n;
    for (int i = 0; i < n; ++i) {
      const double v1 = (i + 0.5) * h1, s1 = xi + v1 * v1;
      const double k1 = 2 * v1 * heat_kernel(s1, a);
      const double v2max = std::sqrt(eta - s1), h2 = v2max / n;
      double inner = 0.0;
      for (int j = 0; j < n; ++j) {
        const double v2 = (j + 0.5) * h2;
        inner += 2 * v2 * heat_kernel(v2 * v2, b - a) * h2;
      }
      total += k1 * inner * h1;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("heat kernel") {
  CHECK(heat_kernel(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(heat_kernel(0.3, 0.7) == heat_kernel(0.3, -0.7));
  CHECK_THROWS_AS(heat_kernel(0.0, 1.0), DomainError);
  // normalisation by a simple Riemann sum
  double s = 0.0;
  for (int i = -20000; i <= 20000; ++i) s += heat_kernel(0.5, i * 1e-3) * 1e-3;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
  // derivatives against central differences
  const double d = 1e-5;
  for (double x : {-1.0, 0.2, 0.9}) {
    CHECK(heat_kernel_derivative(1, 0.4, x) ==
          doctest::Approx((heat_kernel(0.4, x + d) - heat_kernel(0.4, x - d)) / (2 * d)).epsilon(1e-7));
    CHECK(heat_kernel_derivative(2, 0.4, x) ==
          doctest::Approx((heat_kernel_derivative(1, 0.4, x + d) - heat_kernel_derivative(1, 0.4, x - d)) / (2 * d))
              .epsilon(1e-6));
    // p'' = 2 d/dt p
    CHECK(heat_kernel_derivative(2, 0.4, x) ==
          doctest::Approx((heat_kernel(0.4 + d, x) - heat_kernel(0.4 - d, x)) / d).epsilon(1e-6));
  }
}

TEST_CASE("kac moments against closed values") {
  const std::vector<double> one{0.0};
  CHECK(kac_moment(one, {0.0, 1.0}).value == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-8));
  const std::vector<double> two{0.0, 0.0};
  CHECK(kac_moment(two, {0.0, 1.0}).value == doctest::Approx(1.0).epsilon(1e-8));
  const std::vector<double> far{100.0};
  CHECK(std::abs(kac_moment(far, {0.0, 1.0}).value) <= 1e-30);
  // E L(1,0)^3 = 2^{3/2} Gamma(2) / Gamma(1/2) ... moments of |N|: E|N|^3 = 2 sqrt(2/pi)
  const std::vector<double> three{0.0, 0.0, 0.0};
  CHECK(kac_moment(three, {0.0, 1.0}).value == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-7));
  SUBCASE("window increments by scaling: E[L(t,0)] = sqrt(2t/pi)") {
    const double w = kac_moment(one, {0.25, 1.0}).value;
    CHECK(w == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * (1.0 - 0.5)).epsilon(1e-8));
  }
  SUBCASE("independent midpoint rule") {
    const std::vector<double> u{0.1, -0.4};
    CHECK(kac_moment(u, {0.2, 0.9}).value == doctest::Approx(midpoint_kac2(0.1, -0.4, 0.2, 0.9, 800)).epsilon(1e-4));
  }
  SUBCASE("symmetries") {
    QuadratureOptions opt;
    opt.rel_tol = 1e-7;
    const std::vector<double> a{0.3, -0.2, 0.5}, b{0.5, 0.3, -0.2}, c{-0.3, 0.2, -0.5};
    const double va = kac_moment(a, {0.0, 1.0}, opt).value;
    CHECK(kac_moment(b, {0.0, 1.0}, opt).value == doctest::Approx(va).epsilon(1e-9));
    CHECK(kac_moment(c, {0.0, 1.0}, opt).value == doctest::Approx(va).epsilon(1e-9));
  }
  SUBCASE("guards") {
    const std::vector<double> five(5, 0.1);
    CHECK_THROWS_AS(kac_moment(five, {0.0, 1.0}), ConfigError);
    CHECK(kac_moment(one, {0.5, 0.5}).value == 0.0);
  }
}

TEST_CASE("rectangular increments and the closed form") {
  const Window w{0.0, 1.0};
  const std::vector<PointPair> deg{{0.1, 0.1}, {0.2, 0.4}};
  CHECK(rect_increment_moment(deg, w).value == 0.0);
  const std::vector<PointPair> single{{0.0, 0.5}};
  const std::vector<double> p0{0.0}, p1{0.5};
  CHECK(rect_increment_moment(single, w).value ==
        doctest::Approx(kac_moment(p1, w).value - kac_moment(p0, w).value).epsilon(1e-10));

  const std::vector<PointPair> sq{{0.0, 0.5}, {0.0, 0.5}};
  const double corner = rect_increment_moment(sq, w).value;
  const double closed = increment_moment_closed_form(0.0, 0.5, 1, w).value;
  CHECK(closed == doctest::Approx(corner).epsilon(1e-7));
  CHECK(increment_moment_closed_form(0.3, 0.3, 1, w).value == 0.0);

}

TEST_CASE("fourth moments") {
  // E L(1,0)^4 = E|N|^4 = 3
  const std::vector<double> zeros(4, 0.0);
  CHECK(kac_moment(zeros, {0.0, 1.0}).value == doctest::Approx(3.0).epsilon(1e-7));
  // closed form with n = 2 against Monte Carlo
  QuadratureOptions opt;
  opt.rel_tol = 1e-5;
  opt.abs_tol = 1e-3;
  const double f4 = increment_moment_closed_form(0.0, 0.5, 2, {0.0, 1.0}, opt).value;
  // Monte Carlo with the discrete Tanaka formula
  //   L(1,a) ~ |B_1 - a| - |a| - sum sgn(B_k - a) dB_k,
  // which avoids the smoothing bias of the box kernel on increments.
  const double dt = 1e-5;
  double s = 0.0, s2 = 0.0;
  const int n = 3000;
  for (int r = 0; r < n; ++r) {
    const GaussianStream g(77, stream_id(static_cast<std::uint64_t>(r), Role::monte_carlo));
    double b = 0.0, ix = 0.0, iy = 0.0;
    for (int k = 0; k < 100000; ++k) {
      const double db = std::sqrt(dt) * g.normal(static_cast<std::uint64_t>(k));
      ix += (b > 0.0 ? 1.0 : -1.0) * db;
      iy += (b > 0.5 ? 1.0 : -1.0) * db;
      b += db;
    }
    const double lx = std::abs(b) - ix, ly = std::abs(b - 0.5) - 0.5 - iy;
    const double d4 = std::pow(ly - lx, 4);
    s += d4;
    s2 += d4 * d4;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(f4 - mean) <= 0.05 * f4 + 3 * se);
}

TEST_CASE("chain integrals: closed form against direct quadrature") {
  const std::vector<ChainSpec> specs = {
      {{1, 1}, {0.5, -0.7}, {0.0, 1.0}},
      {{0, 1}, {0.4, 0.9}, {0.1, 0.8}},
      {{0, 0, 1}, {-0.3, 0.6, 1.1}, {0.0, 1.0}},
      {{1, 0, 1}, {0.8, -0.5, 0.4}, {0.2, 1.0}},
  };
  for (const auto& s : specs) {
    const double a = chain_integral(s).value;
    const double b = chain_integral_direct(s).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-6).scale(1.0));
    CHECK(std::abs(a) <= 1.0);
  }
  SUBCASE("e1 = 0 with two legs is erfc((|u1|+|u2|)/sqrt(2 eta))") {
    const ChainSpec s{{0, 1}, {0.3, -0.5}, {0.0, 1.0}};
    CHECK(std::abs(chain_integral(s).value) == doctest::Approx(std::erfc(0.8 / std::sqrt(2.0))).epsilon(1e-8));
  }
  SUBCASE("small |u| exceeds 1/sqrt(2) when e1 = 0") {
    const ChainSpec s{{0, 1}, {0.05, 0.05}, {0.0, 1.0}};
    CHECK(std::abs(chain_integral(s).value) > 1.0 / std::sqrt(2.0));
    CHECK(std::abs(chain_integral_direct(s).value) > 1.0 / std::sqrt(2.0));
  }
  SUBCASE("large |u2| decays") {
    const ChainSpec s{{1, 1}, {0.5, 12.0}, {0.0, 1.0}};
    CHECK(std::abs(chain_integral(s).value) < 1e-20);
  }
  SUBCASE("domain") {
    const ChainSpec s{{1, 1}, {0.5, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(chain_integral(s), DomainError);
    const ChainSpec bad{{1, 0}, {0.5, 0.1}, {0.0, 1.0}};
    CHECK_THROWS_AS(chain_integral(bad), ConfigError);
  }
}

TEST_CASE("bound ratios") {
  const std::vector<Window> ws{{0.0, 0.25}, {0.0, 0.5}, {0.0, 1.0}};
  const std::vector<PointPair> grid{{0.0, 0.0}, {0.0, 0.1}, {0.0, 0.5}, {-0.2, 0.3}};
  const auto rep = verify_lxy_bound(1, 0.5, ws, grid);
  CHECK(rep.rows[0].ratio == 0.0);
  for (double c : rep.max_ratio) CHECK(std::isfinite(c));
  CHECK(rep.max_ratio[0] / rep.max_ratio[2] == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("Monte Carlo moments against kac_moment") {
  MomentQuery q;
  q.points = {0.0};
  q.window = {0.0, 1.0};
  const double dt = 1e-4;
  const auto e1 = mc_local_time_moment(q, 4000, dt, 5 * std::sqrt(dt), 5);
  CHECK(std::abs(e1.mean - std::sqrt(2.0 / std::numbers::pi)) <= 0.03 * std::sqrt(2.0 / std::numbers::pi) + 3 * e1.std_error);
  q.points = {0.0, 0.0};
  const auto e2 = mc_local_time_moment(q, 4000, dt, 5 * std::sqrt(dt), 6);
  CHECK(std::abs(e2.mean - 1.0) <= 0.05 + 3 * e2.std_error);
  SUBCASE("serial and parallel agree exactly") {
    q.points = {0.1};
    const auto a = mc_local_time_moment(q, 50, 1e-3, 0.1, 9, false);
    const auto b = mc_local_time_moment(q, 50, 1e-3, 0.1, 9, true);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
  }
  SUBCASE("degenerate window") {
    q.window = {0.5, 0.5};
    CHECK(mc_local_time_moment(q, 10, 1e-3, 0.1, 1).mean == 0.0);
  }
}
