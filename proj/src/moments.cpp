#include "brox/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "brox/errors.hpp"
#include "brox/rng.hpp"

namespace brox {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Leg j of the nested integral starting from s_prev; top_err receives the outer error estimate.
// s_j = base + span sin^2(theta): near the lower end this is the v^2 substitution that removes
// the t^{-1/2} kernel singularity, near eta it smooths the (eta - s)^{k/2} behaviour of the
// remaining legs.
double chain_leg(const std::vector<std::function<double(double)>>& k, std::size_t j, double s_prev,
                 Window w, const QuadratureOptions& opt, double* top_err) {
  const double base = (j == 0) ? w.xi : s_prev;
  const double span = w.eta - base;
  if (!(span > 0.0)) return 0.0;
  auto f = [&](double th) {
    const double sn = std::sin(th), cs = std::cos(th);
    const double off = span * sn * sn;
    const double s = base + off;
    const double dt = (j == 0) ? s : off;
    if (!(dt > 0.0)) return 0.0;
    double val = 2.0 * span * sn * cs * k[j](dt);
    if (val == 0.0) return 0.0;
    if (j + 1 < k.size()) val *= chain_leg(k, j + 1, s, w, opt, nullptr);
    return val;
  };
  double err = 0.0, l1 = 0.0;
  const unsigned depth = (j == 0) ? opt.max_depth : std::min(opt.max_depth, 10u);
  const double r = GK::integrate(f, 0.0, std::numbers::pi / 2, depth, opt.rel_tol, &err, &l1);
  if (top_err) *top_err = err + opt.rel_tol * l1 * static_cast<double>(k.size());
  return r;
}

void check_window(Window w) {
  if (!(w.xi >= 0.0) || !(w.eta >= w.xi)) throw ConfigError("window needs 0 <= xi <= eta");
}

QuadratureValue finish(double value, double err, const QuadratureOptions& opt, const char* what) {
  if (!(err <= opt.abs_tol) || !std::isfinite(value))
    throw AccuracyError(std::string(what) + ": achieved error bound " + std::to_string(err) +
                        " exceeds tolerance " + std::to_string(opt.abs_tol));
  return {value, err};
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

double heat_kernel(double t, double x) {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  return kInvSqrt2Pi / std::sqrt(t) * std::exp(-x * x / (2.0 * t));
}

double heat_kernel_derivative(int k, double t, double x) {
  const double p = heat_kernel(t, x);
  switch (k) {
    case 0: return p;
    case 1: return -x / t * p;
    case 2: return (x * x / (t * t) - 1.0 / t) * p;
    default: throw ConfigError("heat kernel derivative order must be 0, 1 or 2");
  }
}

QuadratureValue simplex_chain(const std::vector<std::function<double(double)>>& kernels, Window w,
                              const QuadratureOptions& opt) {
  check_window(w);
  if (kernels.empty()) throw ConfigError("empty kernel chain");
  if (w.eta == w.xi) return {0.0, 0.0};
  double err = 0.0;
  const double v = chain_leg(kernels, 0, w.xi, w, opt, &err);
  return {v, err};
}

QuadratureValue kac_moment(std::span<const double> points, Window w, const QuadratureOptions& opt,
                           bool allow_six) {
  check_window(w);
  const std::size_t m = points.size();
  if (m == 0) throw ConfigError("kac_moment needs at least one point");
  if (m > (allow_six ? 6u : 4u)) throw ConfigError("kac_moment: order above the cost guard");
  if (w.eta == w.xi) return {0.0, 0.0};
  std::vector<double> seq(points.begin(), points.end());
  std::sort(seq.begin(), seq.end());
  // each distinct ordering stands for prod(multiplicity!) permutations
  double weight = 1.0;
  for (std::size_t i = 0, run = 1; i < m; ++i) {
    run = (i > 0 && seq[i] == seq[i - 1]) ? run + 1 : 1;
    weight *= static_cast<double>(run);
  }
  double total = 0.0, err = 0.0;
  do {
    std::vector<std::function<double(double)>> k;
    double prev = 0.0;
    for (double u : seq) {
      const double d = u - prev;
      k.emplace_back([d](double t) { return heat_kernel(t, d); });
      prev = u;
    }
    const auto r = simplex_chain(k, w, opt);
    total += r.value;
    err += r.error;
  } while (std::next_permutation(seq.begin(), seq.end()));
  return finish(weight * total, weight * err, opt, "kac_moment");
}

QuadratureValue rect_increment_moment(std::span<const PointPair> pairs, Window w,
                                      const QuadratureOptions& opt) {
  check_window(w);
  const std::size_t m = pairs.size();
  if (m == 0 || m > 4) throw ConfigError("rect_increment_moment needs 1 <= m <= 4");
  for (const auto& [x, y] : pairs) {
    if (y < x) throw ConfigError("rectangle pairs need x_k <= y_k");
    if (x == y) return {0.0, 0.0};
  }
  double total = 0.0, err = 0.0;
  std::vector<double> pts(m);
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    int ups = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const bool up = mask & (1u << k);
      pts[k] = up ? pairs[k].second : pairs[k].first;
      ups += up;
    }
    const double sign = ((static_cast<int>(m) - ups) % 2 == 0) ? 1.0 : -1.0;
    const auto r = kac_moment(pts, w, {opt.abs_tol * 1e3, opt.rel_tol, opt.max_depth});
    total += sign * r.value;
    err += r.error;
  }
  return finish(total, err, opt, "rect_increment_moment");
}

QuadratureValue increment_moment_closed_form(double x, double y, int n, Window w,
                                             const QuadratureOptions& opt) {
  check_window(w);
  if (n < 1 || n > 2) throw ConfigError("closed form supports n in {1, 2}");
  if (x == y || w.eta == w.xi) return {0.0, 0.0};
  const double d = x - y;
  std::vector<std::function<double(double)>> k;
  k.emplace_back([x, y](double t) { return heat_kernel(t, x) + heat_kernel(t, y); });
  for (int j = 2; j <= 2 * n; ++j) {
    const double sgn = (j % 2 == 0) ? -1.0 : 1.0;  // (-1)^{j+1}
    k.emplace_back([d, sgn](double t) { return heat_kernel(t, 0.0) + sgn * heat_kernel(t, d); });
  }
  const auto r = simplex_chain(k, w, opt);
  const double f = factorial(2 * n);
  return finish(f * r.value, f * r.error, opt, "increment_moment_closed_form");
}

void ChainSpec::validate() const {
  const std::size_t m = e.size();
  if (m < 2 || m > 6) throw ConfigError("chain needs 2 <= m <= 6");
  if (u.size() != m) throw ConfigError("chain: e and u lengths differ");
  if (e.back() != 1) throw ConfigError("chain: e_m must be 1");
  for (int v : e)
    if (v != 0 && v != 1) throw ConfigError("chain: e must be binary");
  for (double v : u)
    if (v == 0.0) throw DomainError("chain: u_k must be non-zero");
  check_window(window);
}

QuadratureValue chain_integral(const ChainSpec& spec, const QuadratureOptions& opt) {
  spec.validate();
  const std::size_t m = spec.e.size();
  const Window w = spec.window;
  if (w.eta == w.xi) return {0.0, 0.0};
  double sign = 1.0, abs_u = 0.0;
  for (std::size_t j = 1; j < m; ++j) {
    abs_u += std::abs(spec.u[j]);
    const int power = spec.e[j] - spec.e[j - 1] + 1;
    if (power % 2 == 1 && spec.u[j] > 0.0) sign = -sign;  // (-sgn u_j)^power
  }
  const double u1 = spec.u[0];
  std::function<double(double)> f;
  if (spec.e[0] == 0) {
    // f has Laplace transform (2/sqrt(2s)) e^{-|u| sqrt(2s)}, i.e. f(t) = 2 p(t, |u|)
    f = [=](double s) {
      const double r = w.eta - s;
      if (!(r > 0.0)) return 0.0;
      return 2.0 * heat_kernel(s, u1) * heat_kernel(r, abs_u);
    };
  } else {
    f = [=](double s) {
      const double r = w.eta - s;
      if (!(r > 0.0)) return 0.0;
      return heat_kernel_derivative(1, s, u1) * std::erfc(abs_u / std::sqrt(2.0 * r));
    };
  }
  const double span = w.eta - w.xi;
  auto g = [&](double th) {
    const double sn = std::sin(th);
    const double s = w.xi + span * sn * sn;
    return s > 0.0 ? 2.0 * span * sn * std::cos(th) * f(s) : 0.0;
  };
  double err = 0.0, l1 = 0.0;
  const double v = GK::integrate(g, 0.0, std::numbers::pi / 2, opt.max_depth, opt.rel_tol, &err, &l1);
  return finish(sign * v, err + opt.rel_tol * l1, opt, "chain_integral");
}

QuadratureValue chain_integral_direct(const ChainSpec& spec, const QuadratureOptions& opt) {
  spec.validate();
  std::vector<std::function<double(double)>> k;
  int prev = 1;
  for (std::size_t j = 0; j < spec.e.size(); ++j) {
    const int order = spec.e[j] + 1 - prev;
    const double u = spec.u[j];
    k.emplace_back([order, u](double t) { return heat_kernel_derivative(order, t, u); });
    prev = spec.e[j];
  }
  const auto r = simplex_chain(k, spec.window, opt);
  return finish(r.value, r.error, opt, "chain_integral_direct");
}

void MomentQuery::validate() const {
  check_window(window);
  if (kind == MomentKind::points) {
    if (points.empty() || points.size() > 6) throw ConfigError("moment query needs 1..6 points");
    return;
  }
  if (pairs.empty() || pairs.size() > 6) throw ConfigError("moment query needs 1..6 pairs");
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!(pairs[k].first < pairs[k].second)) throw ConfigError("pairs need x_k < y_k");
    if (k > 0 && pairs[k].first < pairs[k - 1].second) throw ConfigError("pairs need y_{k-1} <= x_k");
  }
}

QuadratureValue exact_moment(const MomentQuery& q, const QuadratureOptions& opt) {
  q.validate();
  if (q.kind == MomentKind::points) return kac_moment(q.points, q.window, opt);
  return rect_increment_moment(q.pairs, q.window, opt);
}

namespace {

// One replica: product over the query factors of the box-kernel local time increments.
double mc_replica(const MomentQuery& q, std::int64_t steps, double dt, double epsilon,
                  const GaussianStream& rng) {
  std::vector<double> lo, hi;  // factor k is  L(hi_k) - L(lo_k)  (lo absent for points)
  if (q.kind == MomentKind::points) {
    hi = q.points;
  } else {
    for (const auto& [x, y] : q.pairs) {
      lo.push_back(x);
      hi.push_back(y);
    }
  }
  const std::size_t m = hi.size();
  std::vector<double> acc(m, 0.0);
  const double sd = std::sqrt(dt);
  double b = 0.0;
  std::array<double, 2> z{};
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= q.window.xi) {
      for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(b - hi[i]) <= epsilon) acc[i] += dt;
        if (!lo.empty() && std::abs(b - lo[i]) <= epsilon) acc[i] -= dt;
      }
    }
    if ((k & 1) == 0) rng.fill(static_cast<std::uint64_t>(k), z);
    b += sd * z[k & 1];
  }
  double prod = 1.0;
  for (double a : acc) prod *= a / (2.0 * epsilon);
  return prod;
}

}  // namespace

McEstimate mc_local_time_moment(const MomentQuery& q, std::int64_t n_paths, double dt, double epsilon,
                                std::uint64_t seed, bool parallel) {
  q.validate();
  if (n_paths < 2 || !(dt > 0.0) || !(epsilon > 0.0)) throw ConfigError("invalid Monte Carlo parameters");
  if (q.window.eta == q.window.xi) return {0.0, 0.0, n_paths};
  const auto steps = static_cast<std::int64_t>(std::llround(q.window.eta / dt));
  std::vector<double> vals(static_cast<std::size_t>(n_paths));
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n_paths; ++r)
      vals[static_cast<std::size_t>(r)] =
          mc_replica(q, steps, dt, epsilon, GaussianStream(seed, stream_id(static_cast<std::uint64_t>(r), Role::monte_carlo)));
  } else {
    for (std::int64_t r = 0; r < n_paths; ++r)
      vals[static_cast<std::size_t>(r)] =
          mc_replica(q, steps, dt, epsilon, GaussianStream(seed, stream_id(static_cast<std::uint64_t>(r), Role::monte_carlo)));
  }
  const double n = static_cast<double>(n_paths);
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n), n_paths};
}

BoundReport verify_lxy_bound(int n, double beta, const std::vector<Window>& windows,
                             const std::vector<PointPair>& grid, const QuadratureOptions& opt) {
  if (beta < 0.0 || beta > 0.5) throw ConfigError("beta must lie in [0, 1/2]");
  BoundReport rep;
  for (const auto& w : windows) {
    double mx = 0.0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const auto [x, y] = grid[c];
      const double v = increment_moment_closed_form(x, y, n, w, opt).value;
      const double den = std::pow(w.length(), n * (1.0 - beta)) * std::pow(std::abs(x - y), 2.0 * beta * n);
      const double ratio = (v == 0.0) ? 0.0 : v / den;
      rep.rows.push_back({w, c, v, den, ratio});
      mx = std::max(mx, std::abs(ratio));
    }
    rep.max_ratio.push_back(mx);
  }
  return rep;
}

BoundReport verify_lxyk_bound(double alpha, const std::vector<Window>& windows,
                              const std::vector<std::vector<PointPair>>& configs,
                              const QuadratureOptions& opt) {
  if (alpha < 0.0 || alpha > 0.5) throw ConfigError("alpha must lie in [0, 1/2]");
  BoundReport rep;
  for (const auto& w : windows) {
    double mx = 0.0;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const auto& pairs = configs[c];
      if (pairs.size() % 2 != 0) throw ConfigError("increment products need an even number of pairs");
      const double n = static_cast<double>(pairs.size() / 2);
      const double v = rect_increment_moment(pairs, w, opt).value;
      double den = std::pow(w.length(), n * alpha);
      for (const auto& [x, y] : pairs) den *= std::pow(std::abs(y - x), 1.0 - alpha);
      const double ratio = v / den;
      rep.rows.push_back({w, c, v, den, ratio});
      mx = std::max(mx, std::abs(ratio));
    }
    rep.max_ratio.push_back(mx);
  }
  return rep;
}

}  // namespace brox
