#include "brox/monotone_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "brox/errors.hpp"

namespace brox {

void MonotoneMap::check() const {
  if (x_.size() < 2 || x_.size() != y_.size()) throw ConfigError("monotone map needs >= 2 breakpoints");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw ConfigError("map breakpoints must increase strictly");
    if (!(y_[i] > y_[i - 1])) throw ConfigError("map values must increase strictly");
  }
}

MonotoneMap MonotoneMap::linear(std::vector<double> x, std::vector<double> y, MapDomain domain) {
  MonotoneMap m;
  m.x_ = std::move(x);
  m.y_ = std::move(y);
  m.domain_ = domain;
  m.check();
  return m;
}

MonotoneMap MonotoneMap::exp_primitive(const PolygonalEnvironment& v, double x0, double y0) {
  const auto& xs = v.nodes();
  const auto& ws = v.values();
  auto it = std::lower_bound(xs.begin(), xs.end(), x0);
  if (it == xs.end() || *it != x0) throw ConfigError("anchor of the scale function must be a node");
  const auto z = static_cast<std::size_t>(it - xs.begin());
  const std::size_t n = xs.size();

  MonotoneMap m;
  m.domain_ = MapDomain::space;
  m.x_ = xs;
  m.y_.assign(n, 0.0);
  m.a_.resize(n - 1);
  m.b_.resize(n - 1);
  std::vector<double> inc(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    m.a_[i] = ws[i];
    m.b_[i] = v.slope(i);
    const double d = xs[i + 1] - xs[i];
    inc[i] = m.b_[i] == 0.0 ? std::exp(m.a_[i]) * d : std::exp(m.a_[i]) * std::expm1(m.b_[i] * d) / m.b_[i];
  }
  // Far out in a wide window a segment where V is very negative can contribute less than one ulp;
  // such breakpoints are pushed apart by one ulp (the segment formulas clamp to them).
  constexpr double inf = std::numeric_limits<double>::infinity();
  m.y_[z] = y0;
  for (std::size_t i = z; i + 1 < n; ++i) m.y_[i + 1] = std::max(m.y_[i] + inc[i], std::nextafter(m.y_[i], inf));
  for (std::size_t i = z; i-- > 0;) m.y_[i] = std::min(m.y_[i + 1] - inc[i], std::nextafter(m.y_[i + 1], -inf));
  m.check();
  return m;
}

std::size_t MonotoneMap::segment_of_x(double x) const {
  if (!(x >= x_.front() && x <= x_.back()))
    throw ExtentError("x = " + std::to_string(x) + " outside the map domain");
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  return std::min(i == 0 ? 0 : i - 1, x_.size() - 2);
}

std::size_t MonotoneMap::segment_of_y(double y) const {
  if (!(y >= y_.front() && y <= y_.back()))
    throw RangeError("y = " + std::to_string(y) + " outside the map range");
  auto it = std::upper_bound(y_.begin(), y_.end(), y);
  const auto i = static_cast<std::size_t>(it - y_.begin());
  return std::min(i == 0 ? 0 : i - 1, y_.size() - 2);
}

double MonotoneMap::eval_segment(std::size_t i, double x) const {
  if (x == x_[i]) return y_[i];
  if (x == x_[i + 1]) return y_[i + 1];
  const double dx = x - x_[i];
  if (a_.empty()) return y_[i] + (y_[i + 1] - y_[i]) * dx / (x_[i + 1] - x_[i]);
  const double b = b_[i];
  const double r = b == 0.0 ? dx : std::expm1(b * dx) / b;
  return std::min(y_[i] + std::exp(a_[i]) * r, y_[i + 1]);
}

double MonotoneMap::invert_segment(std::size_t i, double y) const {
  if (y == y_[i]) return x_[i];
  if (y == y_[i + 1]) return x_[i + 1];
  const double dy = y - y_[i];
  double x;
  if (a_.empty()) {
    x = x_[i] + (x_[i + 1] - x_[i]) * dy / (y_[i + 1] - y_[i]);
  } else {
    const double z = dy * std::exp(-a_[i]);
    const double b = b_[i];
    x = x_[i] + (b == 0.0 ? z : std::log1p(b * z) / b);
  }
  return std::clamp(x, x_[i], x_[i + 1]);
}

double MonotoneMap::operator()(double x) const { return eval_segment(segment_of_x(x), x); }

double MonotoneMap::invert(double y) const { return invert_segment(segment_of_y(y), y); }

double MonotoneMap::invert(double y, std::size_t& seg) const {
  if (!(y >= y_.front() && y <= y_.back()))
    throw RangeError("y = " + std::to_string(y) + " outside the map range");
  std::size_t i = std::min(seg, y_.size() - 2);
  int walk = 0;
  while (i + 2 < y_.size() && y >= y_[i + 1] && walk < 8) ++i, ++walk;
  while (i > 0 && y < y_[i] && walk < 16) --i, ++walk;
  if (!(y >= y_[i] && (y < y_[i + 1] || i + 2 == y_.size()))) i = segment_of_y(y);
  seg = i;
  return invert_segment(i, y);
}

double MonotoneMap::log_slope(double x, std::size_t seg) const {
  if (a_.empty()) throw ConfigError("log_slope needs an exp-linear map");
  return a_[seg] + b_[seg] * (x - x_[seg]);
}

MonotoneMap build_scale_function(const PolygonalEnvironment& env) {
  return MonotoneMap::exp_primitive(env, 0.0, 0.0);
}

MonotoneMap build_time_change(const MonotoneMap& scale, const SampledPath& b) {
  if (b.size() < 2) throw ConfigError("time change needs a path with at least one step");
  std::vector<double> tv(b.size());
  tv[0] = 0.0;
  std::size_t seg = 0;
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    if (!(b.value[j] >= scale.y_min() && b.value[j] <= scale.y_max()))
      throw ExtentError("Brownian path leaves the range of the scale function");
    const double x = scale.invert(b.value[j], seg);
    const double w = scale.log_slope(x, seg);
    // Increments below one ulp of the running clock (B deep in a high region of W) would stall it;
    // advance by one ulp instead so the map stays invertible.
    tv[j + 1] = std::max(tv[j] + std::exp(-2.0 * w) * (b.t[j + 1] - b.t[j]),
                         std::nextafter(tv[j], std::numeric_limits<double>::infinity()));
  }
  std::vector<double> u(b.t.begin(), b.t.end());
  return MonotoneMap::linear(std::move(u), std::move(tv), MapDomain::time);
}

StoppingRadius stopping_radius(const MonotoneMap& scale, const SampledPath& b, double xi, double margin) {
  if (!(xi >= b.t.front() && xi <= b.t.back())) throw ExtentError("xi outside the Brownian path");
  double m = std::abs(b.at(xi));
  for (std::size_t j = 0; j < b.size() && b.t[j] <= xi; ++j) m = std::max(m, std::abs(b.value[j]));
  const double level = m + margin;
  const auto& xs = scale.x();
  auto zero = std::lower_bound(xs.begin(), xs.end(), 0.0);
  if (zero == xs.end() || *zero != 0.0) throw ConfigError("scale function must have a node at 0");
  // candidate radii: positive breakpoints in increasing order
  for (auto it = zero + 1; it != xs.end(); ++it) {
    const double r = *it;
    if (scale(r) <= level) continue;
    if (-r < scale.x_min()) break;
    if (scale(-r) < -level) return {xi, r, m};
  }
  throw ExtentError("no stopping radius inside the scale function window");
}

StoppingRadius stopping_radius(TwoSidedEnvironment& env, const SampledPath& b, double xi, double margin,
                               int max_doublings) {
  for (int k = 0;; ++k) {
    try {
      return stopping_radius(build_scale_function(full_view(env)), b, xi, margin);
    } catch (const ExtentError&) {
      if (k >= max_doublings) throw ResourceError("stopping radius: extension budget exhausted");
      env = extend_environment(env, 2.0 * env.x_max());
    }
  }
}

}  // namespace brox
