#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "brox/rng.hpp"

namespace brox {

/// Uniform time grid t_k = t0 + k*dt, k = 0..n_steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  std::int64_t n_steps = 0;

  static TimeGrid covering(double t_end, double dt);  // n_steps = round(t_end/dt)
  void validate() const;
  double time(std::int64_t k) const { return t0 + static_cast<double>(k) * dt; }
  double end() const { return time(n_steps); }
};

/// Piecewise-linear sampled path with strictly increasing (possibly non-uniform) times.
struct SampledPath {
  std::vector<double> t;
  std::vector<double> value;

  std::size_t size() const { return t.size(); }
  double end_time() const { return t.back(); }
  /// Linear interpolation; throws ExtentError outside [t.front(), t.back()].
  double at(double s) const;
  /// Same, starting the search at `hint` and updating it.
  double at(double s, std::size_t& hint) const;
  /// Index of the last node with t <= s.
  std::size_t locate(double s) const;
};

struct BrownianPath : SampledPath {
  std::uint64_t stream = 0;
};

BrownianPath sample_brownian(const TimeGrid& grid, const GaussianStream& rng);
/// Deterministic path with the given increments (used to inject known paths).
BrownianPath brownian_from_increments(const TimeGrid& grid, std::span<const double> increments);

struct EnvironmentStreams {
  GaussianStream positive;
  GaussianStream negative;
  static EnvironmentStreams for_replica(std::uint64_t seed, std::uint64_t replica);
};

/// Two-sided Brownian motion sampled on the grid {i*h : -n_neg <= i <= n_pos}, W(0) = 0.
class TwoSidedEnvironment {
 public:
  TwoSidedEnvironment() = default;
  /// positive[i] = W(i h) and negative[i] = W(-i h); both arrays start with the shared value 0.
  TwoSidedEnvironment(double h, std::vector<double> positive, std::vector<double> negative,
                      EnvironmentStreams streams = {});

  double h() const { return h_; }
  std::int64_t n_pos() const { return static_cast<std::int64_t>(pos_.size()) - 1; }
  std::int64_t n_neg() const { return static_cast<std::int64_t>(neg_.size()) - 1; }
  double x_max() const;  // symmetric extent min(n_pos, n_neg) * h
  double x_pos() const { return static_cast<double>(n_pos()) * h_; }
  double x_neg() const { return static_cast<double>(n_neg()) * h_; }
  std::size_t size() const { return pos_.size() + neg_.size() - 1; }

  double at_index(std::int64_t i) const;
  /// Linear interpolation between grid values.
  double operator()(double x) const;

  const std::vector<double>& positive() const { return pos_; }
  const std::vector<double>& negative() const { return neg_; }
  const EnvironmentStreams& streams() const { return streams_; }

 private:
  double h_ = 0.0;
  std::vector<double> pos_;
  std::vector<double> neg_;
  EnvironmentStreams streams_;
};

TwoSidedEnvironment sample_environment(double x_max, double h, const EnvironmentStreams& streams);
/// Grows the window keeping all existing values; new values come from the same streams.
TwoSidedEnvironment extend_environment(const TwoSidedEnvironment& env, double new_x_max);
/// Environment given by a deterministic function on the grid, e.g. W = 0.
TwoSidedEnvironment environment_from_function(double x_max, double h,
                                              const std::function<double(double)>& w);

/// Increasing nodes; mesh = largest gap.
struct Partition {
  std::vector<double> nodes;

  double mesh() const;
  double a() const { return nodes.front(); }
  double b() const { return nodes.back(); }
  void validate() const;
};

/// Nodes at the multiples of the largest grid multiple not exceeding `mesh`, inside [a, b];
/// a and b are added as nodes. All nodes are multiples of h.
Partition uniform_partition(double h, double mesh, double a, double b);
/// Every grid node of the environment.
Partition grid_partition(const TwoSidedEnvironment& env);

/// Piecewise-linear function through (nodes, values).
class PolygonalEnvironment {
 public:
  PolygonalEnvironment() = default;
  PolygonalEnvironment(std::vector<double> nodes, std::vector<double> values);

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return w_; }
  std::size_t segments() const { return x_.size() - 1; }
  double a() const { return x_.front(); }
  double b() const { return x_.back(); }

  /// Segment index i with x in [x_i, x_{i+1}); the last node maps to the last segment.
  std::size_t segment(double x) const;
  double slope(std::size_t seg) const { return (w_[seg + 1] - w_[seg]) / (x_[seg + 1] - x_[seg]); }
  double operator()(double x) const;
  /// Right derivative.
  double derivative(double x) const { return slope(segment(x)); }

 private:
  std::vector<double> x_;
  std::vector<double> w_;
};

PolygonalEnvironment interpolate_polygonal(const TwoSidedEnvironment& env, const Partition& partition);
PolygonalEnvironment full_view(const TwoSidedEnvironment& env);

/// sup |f| + sup |f(x)-f(y)|/|x-y|^lambda over sample points in [a, b].
double holder_norm(std::span<const double> x, std::span<const double> f, double lambda, double a,
                   double b);

void write_csv(std::ostream& os, const SampledPath& path, const std::string& time_name = "t",
               const std::string& value_name = "value");
void write_csv(std::ostream& os, const TwoSidedEnvironment& env);

}  // namespace brox
