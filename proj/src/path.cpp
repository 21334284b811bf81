#include "brox/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "brox/errors.hpp"

namespace brox {

namespace {

// Tolerance for deciding that a coordinate sits on the grid.
constexpr double kSnap = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::int64_t grid_index(double x, double h) {
  const double r = x / h;
  const double n = std::round(r);
  if (std::abs(r - n) > kSnap * std::max(1.0, std::abs(r)))
    throw ConfigError("point " + fmt(x) + " is not a multiple of the grid step " + fmt(h));
  return static_cast<std::int64_t>(n);
}

}  // namespace

TimeGrid TimeGrid::covering(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ConfigError("time grid needs dt > 0 and t_end > 0");
  TimeGrid g{0.0, dt, static_cast<std::int64_t>(std::llround(t_end / dt))};
  if (g.n_steps < 1) throw ConfigError("time grid would have no steps");
  return g;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (n_steps < 1) throw ConfigError("time grid needs at least one step");
}

std::size_t SampledPath::locate(double s) const {
  if (t.empty() || s < t.front() || s > t.back())
    throw ExtentError("time " + fmt(s) + " outside sampled path");
  auto it = std::upper_bound(t.begin(), t.end(), s);
  std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
  return std::min(i, t.size() - 1);
}

double SampledPath::at(double s) const {
  std::size_t hint = 0;
  return at(s, hint);
}

double SampledPath::at(double s, std::size_t& hint) const {
  if (t.empty() || s < t.front() || s > t.back())
    throw ExtentError("time " + fmt(s) + " outside sampled path");
  const std::size_t n = t.size();
  std::size_t i = std::min(hint, n - 1);
  // short forward / backward walks first, the callers move monotonically
  int walk = 0;
  while (i + 1 < n && t[i + 1] <= s && walk < 8) ++i, ++walk;
  while (i > 0 && t[i] > s && walk < 16) --i, ++walk;
  if (!(t[i] <= s && (i + 1 == n || s < t[i + 1]))) i = locate(s);
  hint = i;
  if (i + 1 == n) return value[i];
  const double w = (s - t[i]) / (t[i + 1] - t[i]);
  return value[i] + w * (value[i + 1] - value[i]);
}

BrownianPath sample_brownian(const TimeGrid& grid, const GaussianStream& rng) {
  grid.validate();
  const auto n = static_cast<std::size_t>(grid.n_steps);
  std::vector<double> z(n);
  rng.fill(0, z);
  const double sd = std::sqrt(grid.dt);
  for (auto& v : z) v *= sd;
  BrownianPath p = brownian_from_increments(grid, z);
  p.stream = rng.stream();
  return p;
}

BrownianPath brownian_from_increments(const TimeGrid& grid, std::span<const double> inc) {
  grid.validate();
  if (inc.size() != static_cast<std::size_t>(grid.n_steps))
    throw ConfigError("increment count does not match the grid");
  BrownianPath p;
  p.t.resize(inc.size() + 1);
  p.value.resize(inc.size() + 1);
  p.value[0] = 0.0;
  for (std::size_t k = 0; k <= inc.size(); ++k) p.t[k] = grid.time(static_cast<std::int64_t>(k));
  for (std::size_t k = 0; k < inc.size(); ++k) p.value[k + 1] = p.value[k] + inc[k];
  return p;
}

EnvironmentStreams EnvironmentStreams::for_replica(std::uint64_t seed, std::uint64_t replica) {
  return {GaussianStream(seed, stream_id(replica, Role::env_positive)),
          GaussianStream(seed, stream_id(replica, Role::env_negative))};
}

TwoSidedEnvironment::TwoSidedEnvironment(double h, std::vector<double> positive,
                                         std::vector<double> negative, EnvironmentStreams streams)
    : h_(h), pos_(std::move(positive)), neg_(std::move(negative)), streams_(streams) {
  if (!(h_ > 0.0)) throw ConfigError("environment grid step must be positive");
  if (pos_.empty() || neg_.empty() || pos_[0] != 0.0 || neg_[0] != 0.0)
    throw ConfigError("environment must satisfy W(0) = 0 on both sides");
}

double TwoSidedEnvironment::x_max() const { return std::min(x_pos(), x_neg()); }

double TwoSidedEnvironment::at_index(std::int64_t i) const {
  if (i >= 0) {
    if (i > n_pos()) throw ExtentError("environment index beyond positive window");
    return pos_[static_cast<std::size_t>(i)];
  }
  if (-i > n_neg()) throw ExtentError("environment index beyond negative window");
  return neg_[static_cast<std::size_t>(-i)];
}

double TwoSidedEnvironment::operator()(double x) const {
  if (x > x_pos() * (1 + 1e-15) || -x > x_neg() * (1 + 1e-15))
    throw ExtentError("x = " + fmt(x) + " outside environment window");
  const double r = x / h_;
  auto i = static_cast<std::int64_t>(std::floor(r));
  i = std::clamp<std::int64_t>(i, -n_neg(), std::max<std::int64_t>(n_pos() - 1, -n_neg()));
  const double w = r - static_cast<double>(i);
  if (w == 0.0 || i == n_pos()) return at_index(i);
  return at_index(i) + w * (at_index(i + 1) - at_index(i));
}

namespace {

void grow_side(std::vector<double>& side, std::int64_t n, double h, const GaussianStream& rng) {
  const auto old = static_cast<std::int64_t>(side.size()) - 1;
  if (n <= old) return;
  std::vector<double> z(static_cast<std::size_t>(n - old));
  rng.fill(static_cast<std::uint64_t>(old), z);
  const double sd = std::sqrt(h);
  side.reserve(static_cast<std::size_t>(n + 1));
  for (double zi : z) side.push_back(side.back() + sd * zi);
}

std::int64_t steps_for(double x_max, double h) {
  return static_cast<std::int64_t>(std::ceil(x_max / h - kSnap));
}

}  // namespace

TwoSidedEnvironment sample_environment(double x_max, double h, const EnvironmentStreams& streams) {
  if (!(h > 0.0) || !(x_max > 0.0)) throw ConfigError("environment needs h > 0 and x_max > 0");
  if (h > x_max) throw ConfigError("environment grid step exceeds the window");
  const std::int64_t n = steps_for(x_max, h);
  std::vector<double> pos{0.0}, neg{0.0};
  grow_side(pos, n, h, streams.positive);
  grow_side(neg, n, h, streams.negative);
  return TwoSidedEnvironment(h, std::move(pos), std::move(neg), streams);
}

TwoSidedEnvironment extend_environment(const TwoSidedEnvironment& env, double new_x_max) {
  if (new_x_max < env.x_max() - kSnap * env.h())
    throw ConfigError("extension must not shrink the environment window");
  const std::int64_t n = steps_for(new_x_max, env.h());
  std::vector<double> pos = env.positive(), neg = env.negative();
  grow_side(pos, n, env.h(), env.streams().positive);
  grow_side(neg, n, env.h(), env.streams().negative);
  return TwoSidedEnvironment(env.h(), std::move(pos), std::move(neg), env.streams());
}

TwoSidedEnvironment environment_from_function(double x_max, double h,
                                              const std::function<double(double)>& w) {
  if (!(h > 0.0) || h > x_max) throw ConfigError("invalid environment grid");
  const std::int64_t n = steps_for(x_max, h);
  std::vector<double> pos(static_cast<std::size_t>(n + 1)), neg(static_cast<std::size_t>(n + 1));
  for (std::int64_t i = 0; i <= n; ++i) {
    pos[static_cast<std::size_t>(i)] = w(static_cast<double>(i) * h);
    neg[static_cast<std::size_t>(i)] = w(-static_cast<double>(i) * h);
  }
  pos[0] = neg[0] = 0.0;
  return TwoSidedEnvironment(h, std::move(pos), std::move(neg));
}

double Partition::mesh() const {
  double m = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) m = std::max(m, nodes[i] - nodes[i - 1]);
  return m;
}

void Partition::validate() const {
  if (nodes.size() < 2) throw ConfigError("partition needs at least two nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw ConfigError("partition nodes must increase strictly");
}

Partition uniform_partition(double h, double mesh, double a, double b) {
  if (!(h > 0.0) || !(mesh > 0.0)) throw ConfigError("partition needs positive h and mesh");
  if (!(b > a)) throw ConfigError("partition interval is empty");
  const std::int64_t step = static_cast<std::int64_t>(std::floor(mesh / h + kSnap));
  if (step < 1) throw ConfigError("partition mesh is below the grid step");
  const std::int64_t ia = grid_index(a, h), ib = grid_index(b, h);
  Partition p;
  p.nodes.push_back(static_cast<double>(ia) * h);
  // multiples of step*h strictly inside (a, b), anchored at 0
  std::int64_t k = (ia >= 0) ? ia / step + 1 : -((-ia) / step);
  for (std::int64_t i = k * step; i < ib; i += step)
    if (i > ia) p.nodes.push_back(static_cast<double>(i) * h);
  p.nodes.push_back(static_cast<double>(ib) * h);
  p.validate();
  return p;
}

Partition grid_partition(const TwoSidedEnvironment& env) {
  Partition p;
  p.nodes.reserve(env.size());
  for (std::int64_t i = -env.n_neg(); i <= env.n_pos(); ++i)
    p.nodes.push_back(static_cast<double>(i) * env.h());
  return p;
}

PolygonalEnvironment::PolygonalEnvironment(std::vector<double> nodes, std::vector<double> values)
    : x_(std::move(nodes)), w_(std::move(values)) {
  if (x_.size() < 2 || x_.size() != w_.size())
    throw ConfigError("polygonal environment needs matching nodes and values");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw ConfigError("polygonal nodes must increase strictly");
}

std::size_t PolygonalEnvironment::segment(double x) const {
  if (x < x_.front() || x > x_.back()) throw ExtentError("x = " + fmt(x) + " outside polygonal window");
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, x_.size() - 2);
}

double PolygonalEnvironment::operator()(double x) const {
  const std::size_t i = segment(x);
  if (x == x_[i]) return w_[i];
  return w_[i] + slope(i) * (x - x_[i]);
}

PolygonalEnvironment interpolate_polygonal(const TwoSidedEnvironment& env, const Partition& partition) {
  partition.validate();
  std::vector<double> vals;
  vals.reserve(partition.nodes.size());
  for (double x : partition.nodes) vals.push_back(env.at_index(grid_index(x, env.h())));
  return PolygonalEnvironment(partition.nodes, std::move(vals));
}

PolygonalEnvironment full_view(const TwoSidedEnvironment& env) {
  return interpolate_polygonal(env, grid_partition(env));
}

double holder_norm(std::span<const double> x, std::span<const double> f, double lambda, double a,
                   double b) {
  if (x.size() != f.size()) throw ConfigError("holder_norm: size mismatch");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("holder exponent must lie in (0, 1]");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= a && x[i] <= b) idx.push_back(i);
  double sup = 0.0, quot = 0.0;
  for (std::size_t p = 0; p < idx.size(); ++p) {
    sup = std::max(sup, std::abs(f[idx[p]]));
    for (std::size_t q = p + 1; q < idx.size(); ++q) {
      const double d = std::abs(x[idx[q]] - x[idx[p]]);
      if (d > 0.0) quot = std::max(quot, std::abs(f[idx[q]] - f[idx[p]]) / std::pow(d, lambda));
    }
  }
  return sup + quot;
}

void write_csv(std::ostream& os, const SampledPath& path, const std::string& time_name,
               const std::string& value_name) {
  os << time_name << ',' << value_name << '\n';
  for (std::size_t i = 0; i < path.size(); ++i) os << fmt(path.t[i]) << ',' << fmt(path.value[i]) << '\n';
}

void write_csv(std::ostream& os, const TwoSidedEnvironment& env) {
  os << "x,W\n";
  for (std::int64_t i = -env.n_neg(); i <= env.n_pos(); ++i)
    os << fmt(static_cast<double>(i) * env.h()) << ',' << fmt(env.at_index(i)) << '\n';
}

}  // namespace brox
