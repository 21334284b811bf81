#include "brox/local_time.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <string>


#include "brox/errors.hpp"

namespace brox {

LocalTimeField::LocalTimeField(std::vector<double> space, std::vector<double> stamps, double epsilon,
                               std::vector<double> values)
    : y_(std::move(space)), xi_(std::move(stamps)), eps_(epsilon), v_(std::move(values)) {
  if (v_.size() != y_.size() * xi_.size()) throw ConfigError("local time field: size mismatch");
}

double LocalTimeField::at(std::size_t stamp, double y) const {
  if (y_.empty() || y < y_.front() || y > y_.back()) return 0.0;
  auto it = std::upper_bound(y_.begin(), y_.end(), y);
  std::size_t j = static_cast<std::size_t>(it - y_.begin()) - 1;
  if (j + 1 >= y_.size() || y == y_[j]) return at(stamp, std::min(j, y_.size() - 1));
  const double w = (y - y_[j]) / (y_[j + 1] - y_[j]);
  return (1.0 - w) * at(stamp, j) + w * at(stamp, j + 1);
}

std::size_t LocalTimeField::stamp_index(double xi) const {
  auto it = std::lower_bound(xi_.begin(), xi_.end(), xi);
  if (it == xi_.end() || *it != xi) throw LookupError("time stamp " + std::to_string(xi) + " not in field");
  return static_cast<std::size_t>(it - xi_.begin());
}

std::size_t LocalTimeField::nearest_stamp(double xi) const {
  if (xi_.empty()) throw LookupError("local time field has no stamps");
  auto it = std::lower_bound(xi_.begin(), xi_.end(), xi);
  if (it == xi_.end()) return xi_.size() - 1;
  const auto i = static_cast<std::size_t>(it - xi_.begin());
  if (i > 0 && xi - xi_[i - 1] <= *it - xi) return i - 1;
  return i;
}

namespace {

void check_inputs(const SampledPath& b, double eps, const std::vector<double>& space,
                  const std::vector<double>& stamps) {
  if (!(eps > 0.0)) throw ConfigError("kernel half-width must be positive");
  if (b.size() < 2) throw ConfigError("path needs at least one step");
  if (space.empty()) throw ConfigError("empty space grid");
  if (!std::is_sorted(space.begin(), space.end()) || !std::is_sorted(stamps.begin(), stamps.end()))
    throw ConfigError("space grid and stamps must be increasing");
  for (double s : stamps)
    if (s < b.t.front() || s > b.t.back()) throw ExtentError("stamp outside the path's time span");
}

// Adds the steps [k0, k1) into a difference array; `row` snapshots happen outside.
// Difference arrays: weights plus hit counts, so cells never visited stay exactly zero.
struct Diff {
  std::vector<double> w;
  std::vector<std::int64_t> c;
  explicit Diff(std::size_t n = 0) : w(n, 0.0), c(n, 0) {}
  bool empty() const { return w.empty(); }
  void add(const Diff& o) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] += o.w[j];
      c[j] += o.c[j];
    }
  }
};

inline void deposit(const SampledPath& b, const std::vector<double>& y, double eps, double inv2e,
                    std::size_t k, double t_cut, Diff& diff) {
  const double w = std::min(b.t[k + 1], t_cut) - b.t[k];
  if (!(w > 0.0)) return;
  const double x = b.value[k];
  const auto lo = std::lower_bound(y.begin(), y.end(), x - eps) - y.begin();
  const auto hi = std::upper_bound(y.begin(), y.end(), x + eps) - y.begin();
  if (hi > lo) {
    diff.w[static_cast<std::size_t>(lo)] += w * inv2e;
    diff.w[static_cast<std::size_t>(hi)] -= w * inv2e;
    diff.c[static_cast<std::size_t>(lo)] += 1;
    diff.c[static_cast<std::size_t>(hi)] -= 1;
  }
}

void snapshot(const Diff& diff, double* row, std::size_t n) {
  double acc = 0.0;
  std::int64_t cnt = 0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += diff.w[j];
    cnt += diff.c[j];
    row[j] = cnt == 0 ? 0.0 : std::max(acc, 0.0);
  }
}

}  // namespace

LocalTimeField occupation_local_time(const SampledPath& b, double epsilon, std::vector<double> space,
                                     std::vector<double> stamps) {
  check_inputs(b, epsilon, space, stamps);
  const std::size_t n = space.size();
  std::vector<double> values(n * stamps.size(), 0.0);
  Diff diff(n + 1);
  const double inv2e = 0.5 / epsilon;
  std::size_t k = 0;
  for (std::size_t m = 0; m < stamps.size(); ++m) {
    const double xi = stamps[m];
    for (; k + 1 < b.size() && b.t[k + 1] <= xi; ++k) deposit(b, space, epsilon, inv2e, k, b.t[k + 1], diff);
    // partial step straddling xi: deposit into a copy so later stamps still see the full step
    if (k + 1 < b.size() && b.t[k] < xi) {
      Diff tmp = diff;
      deposit(b, space, epsilon, inv2e, k, xi, tmp);
      snapshot(tmp, values.data() + m * n, n);
    } else {
      snapshot(diff, values.data() + m * n, n);
    }
  }
  return LocalTimeField(std::move(space), std::move(stamps), epsilon, std::move(values));
}

LocalTimeField occupation_local_time_parallel(const SampledPath& b, double epsilon,
                                              std::vector<double> space, std::vector<double> stamps) {
  check_inputs(b, epsilon, space, stamps);
  const std::size_t n = space.size();
  const double inv2e = 0.5 / epsilon;
  const std::size_t ns = stamps.size();
  const std::size_t nsteps = b.size() - 1;
  std::vector<std::size_t> first(ns + 1, 0);
  {
    std::size_t k = 0;
    for (std::size_t m = 0; m < ns; ++m) {
      while (k < nsteps && b.t[k + 1] <= stamps[m]) ++k;
      first[m + 1] = k;
    }
  }
  // Pieces: stamp intervals cut into blocks of bounded length, so a single stamp still
  // yields parallel work. The cut depends only on the input, not on the thread count.
  const std::size_t target = std::max<std::size_t>(nsteps / 16, 1024);
  struct Piece {
    std::size_t stamp, k0, k1;
  };
  std::vector<Piece> plan;
  for (std::size_t m = 0; m < ns; ++m)
    for (std::size_t k = first[m]; k < first[m + 1]; k += target)
      plan.push_back({m, k, std::min(k + target, first[m + 1])});
  std::vector<Diff> pieces(plan.size());
  std::vector<Diff> partial(ns);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t p = 0; p < plan.size() + ns; ++p) {
    if (p < plan.size()) {
      pieces[p] = Diff(n + 1);
      for (std::size_t k = plan[p].k0; k < plan[p].k1; ++k)
        deposit(b, space, epsilon, inv2e, k, b.t[k + 1], pieces[p]);
    } else {
      const std::size_t m = p - plan.size();
      const std::size_t k = first[m + 1];
      if (k < nsteps && b.t[k] < stamps[m]) {
        partial[m] = Diff(n + 1);
        deposit(b, space, epsilon, inv2e, k, stamps[m], partial[m]);
      }
    }
  }
  std::vector<double> values(n * ns, 0.0);
  Diff diff(n + 1);
  std::size_t p = 0;
  for (std::size_t m = 0; m < ns; ++m) {
    for (; p < plan.size() && plan[p].stamp == m; ++p)
      diff.add(pieces[p]);
    if (partial[m].empty()) {
      snapshot(diff, values.data() + m * n, n);
    } else {
      Diff tmp = diff;
      tmp.add(partial[m]);
      snapshot(tmp, values.data() + m * n, n);
    }
  }
  return LocalTimeField(std::move(space), std::move(stamps), epsilon, std::move(values));
}

double default_epsilon(double dt) { return 5.0 * std::sqrt(dt); }

double local_time_increment(const LocalTimeField& field, double xi, double eta, double y) {
  if (eta < xi) throw ConfigError("local time increment needs xi <= eta");
  return field.at(field.stamp_index(eta), y) - field.at(field.stamp_index(xi), y);
}

double brox_local_time(const LocalTimeField& field_b, const PolygonalEnvironment& env,
                       const MonotoneMap& scale, const MonotoneMap& time_change, double t, double x) {
  if (t < 0.0) throw ConfigError("negative time");
  if (t > time_change.y_max()) throw ExtentError("t beyond the time change range");
  const double xi = time_change.invert(t);
  return std::exp(-env(x)) * field_b.at(field_b.nearest_stamp(xi), scale(x));
}

double occupation_residual(const SampledPath& path, const LocalTimeField& field,
                           const std::function<double(double)>& f, double t) {
  double lhs = 0.0;
  for (std::size_t k = 0; k + 1 < path.size() && path.t[k] < t; ++k)
    lhs += f(path.value[k]) * (std::min(path.t[k + 1], t) - path.t[k]);
  const std::size_t m = field.stamp_index(t);
  const auto& y = field.space();
  double rhs = 0.0;
  for (std::size_t j = 0; j + 1 < y.size(); ++j)
    rhs += 0.5 * (field.at(m, j) * f(y[j]) + field.at(m, j + 1) * f(y[j + 1])) * (y[j + 1] - y[j]);
  return std::abs(lhs - rhs);
}

}  // namespace brox
