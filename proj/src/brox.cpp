#include "brox/brox.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "brox/errors.hpp"

namespace brox {

// ---------------------------------------------------------------- test functions

TestFunction TestFunction::constant(double c) {
  auto zero = [](double, double) { return 0.0; };
  return {[c](double, double) { return c; }, zero, zero, zero, 0.0, 1.0};
}

TestFunction TestFunction::exp_u() {
  auto e = [](double, double u) { return std::exp(u); };
  return {e, e, [](double, double) { return 0.0; }, e, 1.0, 1.0};
}

TestFunction TestFunction::damped() const {
  TestFunction d;
  d.theta = theta;
  d.lambda = lambda;
  auto g0 = g, gu = dg_du, gx = dg_dx, guu = d2g_du2;
  d.g = [g0](double x, double u) { return g0(x, u) * std::exp(-u); };
  d.dg_du = [g0, gu](double x, double u) { return (gu(x, u) - g0(x, u)) * std::exp(-u); };
  if (gx) d.dg_dx = [gx](double x, double u) { return gx(x, u) * std::exp(-u); };
  if (guu)
    d.d2g_du2 = [g0, gu, guu](double x, double u) {
      return (guu(x, u) - 2.0 * gu(x, u) + g0(x, u)) * std::exp(-u);
    };
  return d;
}

TestFunction TestFunction::du() const {
  if (!d2g_du2) throw ConfigError("differentiating a test function in u needs d2g_du2");
  TestFunction d;
  d.g = dg_du;
  d.dg_du = d2g_du2;
  d.theta = theta;
  d.lambda = lambda;
  return d;
}

double TestFunction::derivative_mismatch(double step) const {
  static constexpr std::array<double, 4> xs = {-1.0, -0.3, 0.2, 1.0};
  static constexpr std::array<double, 4> us = {-1.0, 0.0, 0.5, 1.0};
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (double x : xs)
    for (double u : us) {
      const double fu = (g(x, u + step) - g(x, u - step)) / (2 * step);
      worst = std::max(worst, rel(fu, dg_du(x, u)));
      if (dg_dx) worst = std::max(worst, rel((g(x + step, u) - g(x - step, u)) / (2 * step), dg_dx(x, u)));
      if (d2g_du2)
        worst = std::max(worst, rel((dg_du(x, u + step) - dg_du(x, u - step)) / (2 * step), d2g_du2(x, u)));
    }
  return worst;
}

void check_test_function(const TestFunction& f, double tol) {
  if (!f.g || !f.dg_du) throw ConfigError("test function needs g and dg_du");
  const double m = f.derivative_mismatch();
  if (!(m <= tol))
    throw ConfigError("declared derivative of the test function disagrees with finite differences (" +
                      std::to_string(m) + ")");
}

// ---------------------------------------------------------------- environments

EnvironmentSource brownian_environment(const EnvironmentStreams& streams, double h) {
  return [streams, h](double radius) { return sample_environment(radius, h, streams); };
}

EnvironmentSource fixed_environment(TwoSidedEnvironment env) {
  return [env = std::move(env)](double radius) {
    if (radius > env.x_max() * (1.0 + 1e-12)) throw ExtentError("fixed environment window is too small");
    return env;
  };
}

EnvironmentSource function_environment(double h, std::function<double(double)> w) {
  return [h, w = std::move(w)](double radius) { return environment_from_function(radius, h, w); };
}

Partition adaptive_partition(const AdaptiveParams& p, double h, double a, double b) {
  if (!(p.delta > 0.0) || !(p.kappa > 0.0) || !(p.gamma > 0.0))
    throw ConfigError("adaptive partition needs delta, kappa, gamma > 0");
  if (!(h > 0.0) || !(b > a)) throw ConfigError("adaptive partition needs h > 0 and a < b");
  const double per_unit = 1.0 / h;
  if (std::abs(per_unit - std::round(per_unit)) > 1e-9 * per_unit)
    throw ConfigError("adaptive partition needs 1/h to be an integer");
  const auto ia = static_cast<std::int64_t>(std::llround(a / h));
  const auto ib = static_cast<std::int64_t>(std::llround(b / h));
  const auto unit = static_cast<std::int64_t>(std::llround(per_unit));
  Partition part;
  const auto n_lo = static_cast<std::int64_t>(std::floor(a)) + 1;
  const auto n_hi = static_cast<std::int64_t>(std::ceil(b));
  for (std::int64_t n = n_lo; n <= n_hi; ++n) {
    const int an = static_cast<int>(std::abs(n));
    const double c3 = p.c3(static_cast<int>(n));
    if (!(c3 > 0.0)) throw ConfigError("c3 profile must be positive");
    const double mesh = std::pow(p.delta * std::ldexp(1.0, -an - 2) / c3, 6.0 / p.gamma) *
                        std::exp(-p.kappa * an / p.gamma);
    const auto step = static_cast<std::int64_t>(std::floor(mesh / h + 1e-9));
    if (step < 1)
      throw ConfigError("adaptive mesh " + std::to_string(mesh) + " on [" + std::to_string(n - 1) + "," +
                        std::to_string(n) + "] is below the grid step; refine h or raise delta");
    const std::int64_t lo = std::max(ia, (n - 1) * unit), hi = std::min(ib, n * unit);
    for (std::int64_t i = lo; i < hi; i += step) part.nodes.push_back(static_cast<double>(i) * h);
  }
  part.nodes.push_back(static_cast<double>(ib) * h);
  part.validate();
  return part;
}

PolygonalEnvironment make_view(const TwoSidedEnvironment& env, const PartitionRule& rule) {
  const std::int64_t n = std::min(env.n_pos(), env.n_neg());
  const double r = static_cast<double>(n) * env.h();
  switch (rule.kind) {
    case PartitionRule::Kind::grid: {
      Partition p;
      p.nodes.reserve(static_cast<std::size_t>(2 * n + 1));
      for (std::int64_t i = -n; i <= n; ++i) p.nodes.push_back(static_cast<double>(i) * env.h());
      return interpolate_polygonal(env, p);
    }
    case PartitionRule::Kind::uniform:
      return interpolate_polygonal(env, uniform_partition(env.h(), rule.mesh, -r, r));
    case PartitionRule::Kind::adaptive:
      return interpolate_polygonal(env, adaptive_partition(rule.adaptive, env.h(), -r, r));
  }
  throw ConfigError("unknown partition rule");
}

// ---------------------------------------------------------------- Ito-McKean construction

SampledPath sample_clocked_brownian(const MonotoneMap& scale, const GaussianStream& rng, double dt,
                                    std::int64_t steps) {
  if (!(dt > 0.0) || steps < 1) throw ConfigError("clocked sampling needs dt > 0 and steps >= 1");
  SampledPath b;
  b.t.resize(static_cast<std::size_t>(steps + 1));
  b.value.resize(static_cast<std::size_t>(steps + 1));
  b.t[0] = b.value[0] = 0.0;
  constexpr std::size_t kBlock = 4096;
  std::array<double, kBlock> z{};
  std::size_t seg = 0;
  double u = 0.0, y = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto slot = static_cast<std::size_t>(k) % kBlock;
    if (slot == 0) rng.fill(static_cast<std::uint64_t>(k), z);
    if (!(y > scale.y_min() && y < scale.y_max()))
      throw ExtentError("Brownian path leaves the range of the scale function");
    const double x = scale.invert(y, seg);
    const double du = std::exp(2.0 * scale.log_slope(x, seg)) * dt;
    u += du;
    y += std::sqrt(du) * z[slot];
    b.t[static_cast<std::size_t>(k + 1)] = u;
    b.value[static_cast<std::size_t>(k + 1)] = y;
  }
  if (!(y > scale.y_min() && y < scale.y_max()))
    throw ExtentError("Brownian path leaves the range of the scale function");
  return b;
}

std::vector<double> driving_bm(const MonotoneMap& scale, const SampledPath& b) {
  std::vector<double> out(b.size(), 0.0);
  std::size_t seg = 0;
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    const double x = scale.invert(b.value[j], seg);
    out[j + 1] = out[j] + std::exp(-scale.log_slope(x, seg)) * (b.value[j + 1] - b.value[j]);
  }
  return out;
}

namespace {

bool inside(const MonotoneMap& scale, const SampledPath& b, double margin) {
  const auto [lo, hi] = std::minmax_element(b.value.begin(), b.value.end());
  return *lo - margin > scale.y_min() && *hi + margin < scale.y_max();
}

BroxRealization assemble(TwoSidedEnvironment env, PolygonalEnvironment view, MonotoneMap scale,
                         SampledPath b, const TimeGrid& out) {
  out.validate();
  BroxRealization r;
  r.time_change = build_time_change(scale, b);
  r.calb_nodes = driving_bm(scale, b);
  if (out.end() > r.time_change.y_max() * (1.0 + 1e-12))
    throw ExtentError("Brownian path too short for the requested horizon");
  const auto n = static_cast<std::size_t>(out.n_steps + 1);
  r.x.t.resize(n);
  r.x.value.resize(n);
  r.calb.t.resize(n);
  r.calb.value.resize(n);
  r.xi.resize(n);
  std::size_t tseg = 0, bseg = 0, sseg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = out.time(static_cast<std::int64_t>(k));
    const double u = (t <= 0.0) ? 0.0 : r.time_change.invert(std::min(t, r.time_change.y_max()), tseg);
    // locate u among the nodes of b (hint in bseg)
    while (bseg + 1 < b.size() && b.t[bseg + 1] <= u) ++bseg;
    double bu, cu;
    if (bseg + 1 == b.size()) {
      bu = b.value[bseg];
      cu = r.calb_nodes[bseg];
    } else {
      const double w = (u - b.t[bseg]) / (b.t[bseg + 1] - b.t[bseg]);
      bu = b.value[bseg] + w * (b.value[bseg + 1] - b.value[bseg]);
      cu = r.calb_nodes[bseg] + w * (r.calb_nodes[bseg + 1] - r.calb_nodes[bseg]);
    }
    r.xi[k] = u;
    r.x.t[k] = r.calb.t[k] = t;
    r.x.value[k] = scale.invert(bu, sseg);
    r.calb.value[k] = cu;
  }
  r.env = std::move(env);
  r.view = std::move(view);
  r.scale = std::move(scale);
  r.b = std::move(b);
  return r;
}

}  // namespace

BroxRealization itomckean_path(const EnvironmentSource& source, const PartitionRule& rule,
                               const SampledPath& b, const TimeGrid& out, const SimulationOptions& opt) {
  double radius = opt.initial_radius;
  for (int k = 0;; ++k, radius *= 2.0) {
    TwoSidedEnvironment env = source(radius);
    PolygonalEnvironment view = make_view(env, rule);
    MonotoneMap scale = build_scale_function(view);
    if (inside(scale, b, opt.margin)) return assemble(std::move(env), std::move(view), std::move(scale), b, out);
    if (k >= opt.max_doublings) throw ResourceError("environment window budget exhausted");
  }
}

BroxRealization simulate_brox(const EnvironmentSource& source, const PartitionRule& rule,
                              const GaussianStream& rng, const TimeGrid& out, std::int64_t substeps,
                              const SimulationOptions& opt) {
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(opt.margin >= 0.0)) throw ConfigError("margin must be non-negative");
  out.validate();
  const double dt = out.dt / static_cast<double>(substeps);
  const std::int64_t steps = (out.n_steps + 2) * substeps;
  double radius = opt.initial_radius;
  for (int k = 0;; ++k, radius *= 2.0) {
    TwoSidedEnvironment env = source(radius);
    PolygonalEnvironment view = make_view(env, rule);
    MonotoneMap scale = build_scale_function(view);
    try {
      SampledPath b = sample_clocked_brownian(scale, rng, dt, steps);
      if (!inside(scale, b, opt.margin)) throw ExtentError("Brownian path too close to the window edge");
      return assemble(std::move(env), std::move(view), std::move(scale), std::move(b), out);
    } catch (const ExtentError&) {
      if (k >= opt.max_doublings) throw ResourceError("environment window budget exhausted");
    }
  }
}

double realized_qv(const SampledPath& p, double t) {
  double qv = 0.0;
  for (std::size_t k = 0; k + 1 < p.size() && p.t[k + 1] <= t * (1.0 + 1e-12); ++k) {
    const double d = p.value[k + 1] - p.value[k];
    qv += d * d;
  }
  return qv;
}

// ---------------------------------------------------------------- Stratonovich integrals

namespace {

// L(xi, S(x_i)) at the nodes of the view.
std::vector<double> local_time_on_nodes(const PolygonalEnvironment& view, const MonotoneMap& scale,
                                        const LocalTimeField& field, std::size_t stamp) {
  const auto& xs = view.nodes();
  std::vector<double> l(xs.size());
  const bool same = field.space().size() == xs.size() && scale.x().size() == xs.size();
  for (std::size_t i = 0; i < xs.size(); ++i)
    l[i] = same ? field.at(stamp, i) : field.at(stamp, scale(xs[i]));
  return l;
}

}  // namespace

double stratonovich_integral(const TestFunction& f, const PolygonalEnvironment& view,
                             const MonotoneMap& scale, const LocalTimeField& field, std::size_t stamp,
                             double a, double b) {
  if (a == b) return 0.0;
  if (!(b > a)) throw ConfigError("integration interval is reversed");
  const auto& xs = view.nodes();
  const auto& ws = view.values();
  const std::vector<double> l = local_time_on_nodes(view, scale, field, stamp);
  const double slack = 1e-9 * (xs.back() - xs.front()) / static_cast<double>(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (xs[i] < a - slack || xs[i + 1] > b + slack) continue;
    const double dw = ws[i + 1] - ws[i];
    const double qv = dw * dw;  // realized d[W] on the cell
    if (xs[i] >= 0.0) {
      if (l[i] == 0.0) continue;
      sum += f.g(xs[i], ws[i]) * l[i] * dw + 0.5 * f.dg_du(xs[i], ws[i]) * l[i] * qv;
    } else {
      const std::size_t j = i + 1;  // endpoint closer to the origin
      if (l[j] == 0.0) continue;
      sum += f.g(xs[j], ws[j]) * l[j] * dw - 0.5 * f.dg_du(xs[j], ws[j]) * l[j] * qv;
    }
  }
  return sum;
}

double stratonovich_riemann(const TestFunction& f, const PolygonalEnvironment& view,
                            const MonotoneMap& scale, const LocalTimeField& field, std::size_t stamp,
                            const PolygonalEnvironment& coarse) {
  const auto& xs = view.nodes();
  const auto& ws = view.values();
  const std::vector<double> l = local_time_on_nodes(view, scale, field, stamp);
  const auto& cx = coarse.nodes();
  // absolute tolerance: coarse nodes are grid nodes up to rounding, on either side of 0
  const double slack = 1e-9 * (xs.back() - xs.front()) / static_cast<double>(xs.size());
  double sum = 0.0;
  std::size_t i =
      static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), cx.front() - slack) - xs.begin());
  for (std::size_t s = 0; s + 1 < cx.size(); ++s) {
    double inner = 0.0;
    for (; i + 1 < xs.size() && xs[i + 1] <= cx[s + 1] + slack; ++i) {
      const double fa = l[i] == 0.0 ? 0.0 : f.g(xs[i], ws[i]) * l[i];
      const double fb = l[i + 1] == 0.0 ? 0.0 : f.g(xs[i + 1], ws[i + 1]) * l[i + 1];
      inner += 0.5 * (fa + fb) * (xs[i + 1] - xs[i]);
    }
    sum += coarse.slope(s) * inner;
  }
  return sum;
}

namespace {

struct StampedField {
  LocalTimeField field;
  std::vector<double> xi;
};

StampedField field_for(const BroxRealization& r, std::span<const double> times, double epsilon) {
  StampedField out;
  std::size_t seg = 0;
  for (double t : times) {
    if (t < 0.0 || t > r.time_change.y_max()) throw ExtentError("time outside the realization");
    out.xi.push_back(t == 0.0 ? 0.0 : r.time_change.invert(t, seg));
  }
  if (!std::is_sorted(out.xi.begin(), out.xi.end())) throw ConfigError("times must be increasing");
  out.field = occupation_local_time_parallel(r.b, epsilon, r.scale.y(), out.xi);
  return out;
}

// Integration window: the stopping radius when it exists inside the view, otherwise the whole
// view provided the local time vanishes at its edges.
double integration_radius(const BroxRealization& r, const LocalTimeField& field, std::size_t m,
                          double xi, double epsilon) {
  try {
    return stopping_radius(r.scale, r.b, xi, epsilon).radius;
  } catch (const ExtentError&) {
    const std::size_t n = field.space().size();
    if (field.at(m, std::size_t{0}) != 0.0 || field.at(m, n - 1) != 0.0)
      throw ExtentError("local time does not vanish at the edge of the environment window");
    return std::min(-r.view.a(), r.view.b());
  }
}

}  // namespace

DriftSeries drift_integral(const TestFunction& g, const BroxRealization& r, std::span<const double> times,
                           double epsilon) {
  const TestFunction gd = g.damped();
  const StampedField sf = field_for(r, times, epsilon);
  DriftSeries d;
  for (std::size_t m = 0; m < times.size(); ++m) {
    const double rad = integration_radius(r, sf.field, m, sf.xi[m], epsilon);
    d.t.push_back(times[m]);
    d.xi.push_back(sf.xi[m]);
    d.radius.push_back(rad);
    d.value.push_back(stratonovich_integral(gd, r.view, r.scale, sf.field, m, -rad, rad));
  }
  return d;
}

DriftSeries drift_integral_riemann(const TestFunction& g, const BroxRealization& r,
                                   const PolygonalEnvironment& coarse, std::span<const double> times,
                                   double epsilon) {
  const TestFunction gd = g.damped();
  const StampedField sf = field_for(r, times, epsilon);
  DriftSeries d;
  for (std::size_t m = 0; m < times.size(); ++m) {
    d.t.push_back(times[m]);
    d.xi.push_back(sf.xi[m]);
    d.radius.push_back(std::min(-coarse.a(), coarse.b()));
    d.value.push_back(stratonovich_riemann(gd, r.view, r.scale, sf.field, m, coarse));
  }
  return d;
}

namespace {

std::size_t grid_index_of(const SampledPath& p, double t) {
  auto it = std::lower_bound(p.t.begin(), p.t.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it == p.t.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw LookupError("time " + std::to_string(t) + " is not an output grid point");
  return static_cast<std::size_t>(it - p.t.begin());
}

}  // namespace

DriftSeries drift_integral_polygonal(const TestFunction& g, const BroxRealization& r,
                                     std::span<const double> times) {
  const auto& x = r.x;
  std::vector<double> cum(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double xk = x.value[k];
    const std::size_t s = r.view.segment(xk);
    cum[k + 1] = cum[k] + g.g(xk, r.view(xk)) * r.view.slope(s) * (x.t[k + 1] - x.t[k]);
  }
  DriftSeries d;
  for (double t : times) {
    const std::size_t k = grid_index_of(x, t);
    d.t.push_back(t);
    d.xi.push_back(r.xi[k]);
    d.radius.push_back(0.0);
    d.value.push_back(cum[k]);
  }
  return d;
}

double equation_residual(const BroxRealization& r, const DriftSeries& drift, double t) {
  const std::size_t k = grid_index_of(r.x, t);
  auto it = std::find_if(drift.t.begin(), drift.t.end(),
                         [t](double s) { return std::abs(s - t) <= 1e-12 * std::max(1.0, std::abs(t)); });
  if (it == drift.t.end()) throw LookupError("drift series has no value at the requested time");
  const double dv = drift.value[static_cast<std::size_t>(it - drift.t.begin())];
  return std::abs(r.x.value[k] - r.calb.value[k] + 0.5 * dv);
}

double antiderivative(const TestFunction& f, const PolygonalEnvironment& view, double x) {
  using GL = boost::math::quadrature::gauss<double, 5>;
  if (x == 0.0) return 0.0;
  const double lo = std::min(0.0, x), hi = std::max(0.0, x);
  const auto& xs = view.nodes();
  std::size_t i = view.segment(lo);
  double sum = 0.0;
  for (; i < view.segments() && xs[i] < hi; ++i) {
    const double a = std::max(xs[i], lo), b = std::min(xs[i + 1], hi);
    if (!(b > a)) continue;
    const double w0 = view.values()[i], s = view.slope(i), x0 = xs[i];
    sum += GL::integrate([&](double y) { return f.g(y, w0 + s * (y - x0)); }, a, b);
  }
  return x > 0.0 ? sum : -sum;
}

double ito_formula_residual(const TestFunction& f, const BroxRealization& r, double t, double epsilon) {
  const std::size_t k = grid_index_of(r.x, t);
  const auto& x = r.x;
  double stoch = 0.0, dx_term = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double xj = x.value[j], wj = r.view(xj);
    stoch += f.g(xj, wj) * (r.calb.value[j + 1] - r.calb.value[j]);
    if (f.dg_dx) dx_term += f.dg_dx(xj, wj) * (x.t[j + 1] - x.t[j]);
  }
  const std::array<double, 1> ts = {t};
  const double s_f = drift_integral(f, r, ts, epsilon).value[0];
  const double s_fu = drift_integral(f.du(), r, ts, epsilon).value[0];
  const double lhs = antiderivative(f, r.view, x.value[k]);
  return std::abs(lhs - stoch - 0.5 * dx_term + 0.5 * s_f - 0.5 * s_fu);
}

}  // namespace brox
