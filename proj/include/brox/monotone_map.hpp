#pragma once

#include <cstddef>
#include <vector>

#include "brox/path.hpp"

namespace brox {

enum class MapDomain { space, time };

/// Strictly increasing piecewise map through breakpoints (x_i, y_i).
///
/// A segment is either linear or exp-linear, y = y_i + e^{a_i} (e^{b_i (x - x_i)} - 1) / b_i,
/// which is the exact primitive of exp of a linear function. Both kinds invert in closed form.
class MonotoneMap {
 public:
  MonotoneMap() = default;

  /// Linear interpolation through the breakpoints.
  static MonotoneMap linear(std::vector<double> x, std::vector<double> y, MapDomain domain);
  /// x -> int_{x0}^{x} exp(V) for the polygonal V, with value y0 at the node x0 (x0 must be a node).
  static MonotoneMap exp_primitive(const PolygonalEnvironment& v, double x0, double y0 = 0.0);

  double operator()(double x) const;
  double invert(double y) const;
  /// Inversion with a segment hint (updated); cheap when consecutive queries are close.
  double invert(double y, std::size_t& seg) const;

  /// For exp-linear maps: log of the derivative at x in segment seg, i.e. V(x).
  double log_slope(double x, std::size_t seg) const;

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  double y_min() const { return y_.front(); }
  double y_max() const { return y_.back(); }
  std::size_t segments() const { return x_.size() - 1; }
  MapDomain domain() const { return domain_; }
  bool is_linear() const { return a_.empty(); }

  std::size_t segment_of_x(double x) const;
  std::size_t segment_of_y(double y) const;

 private:
  double eval_segment(std::size_t i, double x) const;
  double invert_segment(std::size_t i, double y) const;
  void check() const;

  std::vector<double> x_, y_;
  std::vector<double> a_, b_;  // empty for linear maps
  MapDomain domain_ = MapDomain::space;
};

/// S_W(x) = int_0^x e^{W}, exact for the polygonal environment (0 must be a node).
MonotoneMap build_scale_function(const PolygonalEnvironment& env);

/// T(u) = int_0^u exp(-2 W(S^{-1}(B(s)))) ds with left-endpoint values on the nodes of B.
MonotoneMap build_time_change(const MonotoneMap& scale, const SampledPath& b);

struct StoppingRadius {
  double xi = 0.0;
  double radius = 0.0;
  double b_sup = 0.0;  // max_{s <= xi} |B(s)|
};

/// Smallest scale breakpoint x > 0 with S(x) > max_{s<=xi}|B(s)| + margin and
/// S(-x) < -(max|B| + margin). Throws ExtentError when the map is too short.
StoppingRadius stopping_radius(const MonotoneMap& scale, const SampledPath& b, double xi,
                               double margin = 0.0);

/// Same, growing the environment (by doubling) until a radius exists.
StoppingRadius stopping_radius(TwoSidedEnvironment& env, const SampledPath& b, double xi,
                               double margin = 0.0, int max_doublings = 12);

}  // namespace brox
