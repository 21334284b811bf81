#include "brox/strong.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brox/errors.hpp"

namespace brox {

namespace {

struct Coefficient {
  MonotoneMap scale;
  double lo = 0.0, hi = 0.0;  // S(-k), S(k)
  double k = 0.0;
};

Coefficient make_coefficient(const EnvironmentSource& source, double k) {
  TwoSidedEnvironment env = source(k);
  if (env.x_max() < k * (1.0 - 1e-12)) throw ExtentError("environment source returned a window smaller than requested");
  Coefficient c;
  c.scale = build_scale_function(full_view(env));
  const double kk = std::min(k, env.x_max());
  c.lo = c.scale(-kk);
  c.hi = c.scale(kk);
  c.k = k;
  return c;
}

}  // namespace

AuxiliarySolution solve_m(const EnvironmentSource& source, const SampledPath& calb, const StrongOptions& opt) {
  if (!(opt.k_trunc > 0.0)) throw ConfigError("truncation level must be positive");
  if (calb.size() < 2) throw ConfigError("driving path needs at least one step");
  AuxiliarySolution sol;
  sol.m.t = calb.t;
  sol.m.value.assign(calb.size(), 0.0);
  Coefficient c = make_coefficient(source, opt.k_trunc);
  std::size_t seg = 0;
  for (std::size_t j = 0; j + 1 < calb.size(); ++j) {
    const double mj = sol.m.value[j];
    const double z = std::clamp(mj, c.lo, c.hi);
    const double x = c.scale.invert(z, seg);
    const double phi = std::exp(c.scale.log_slope(x, seg));
    const double next = mj + phi * (calb.value[j + 1] - calb.value[j]);
    sol.m.value[j + 1] = next;
    while (next <= c.lo || next >= c.hi) {
      if (sol.escalations >= opt.max_escalations) throw ResourceError("truncation escalation budget exhausted");
      c = make_coefficient(source, 2.0 * c.k);
      ++sol.escalations;
      seg = 0;
    }
  }
  sol.k_trunc = c.k;
  return sol;
}

TimeChangeResult compute_tau_and_b(const AuxiliarySolution& sol, const MonotoneMap& scale) {
  const auto& m = sol.m;
  std::vector<double> u(m.size(), 0.0);
  std::size_t seg = 0;
  for (std::size_t j = 0; j + 1 < m.size(); ++j) {
    const double x = scale.invert(m.value[j], seg);
    u[j + 1] = std::max(u[j] + std::exp(2.0 * scale.log_slope(x, seg)) * (m.t[j + 1] - m.t[j]),
                        std::nextafter(u[j], std::numeric_limits<double>::infinity()));
  }
  TimeChangeResult r;
  r.u = MonotoneMap::linear(m.t, u, MapDomain::time);
  r.tau = MonotoneMap::linear(u, m.t, MapDomain::time);
  r.b.t = u;
  r.b.value = m.value;
  return r;
}

SampledPath strong_path(const MonotoneMap& scale, const AuxiliarySolution& sol) {
  SampledPath x;
  x.t = sol.m.t;
  x.value.resize(sol.m.size());
  std::size_t seg = 0;
  for (std::size_t j = 0; j < sol.m.size(); ++j) x.value[j] = scale.invert(sol.m.value[j], seg);
  return x;
}

RoundtripResult roundtrip_error(const EnvironmentSource& source, const SampledPath& b, const TimeGrid& out,
                                const StrongOptions& opt, const SimulationOptions& sim) {
  const BroxRealization r = itomckean_path(source, PartitionRule::grid(), b, out, sim);
  const AuxiliarySolution sol = solve_m(source, r.calb, opt);
  // one map large enough for both M and the original B
  const double k = std::max(sol.k_trunc, -r.view.a());
  const MonotoneMap scale = build_scale_function(full_view(source(k)));
  const SampledPath xs = strong_path(scale, sol);
  RoundtripResult res;
  res.escalations = sol.escalations;
  for (std::size_t j = 0; j < xs.size(); ++j)
    res.sup_x_error = std::max(res.sup_x_error, std::abs(xs.value[j] - r.x.value[j]));
  const TimeChangeResult tc = compute_tau_and_b(sol, scale);
  std::size_t hint = 0;
  const double u_end = std::min(b.end_time(), tc.b.t.back());
  for (std::size_t j = 0; j < tc.b.size() && tc.b.t[j] <= u_end; ++j)
    res.sup_b_error = std::max(res.sup_b_error, std::abs(tc.b.value[j] - b.at(tc.b.t[j], hint)));
  return res;
}

}  // namespace brox
