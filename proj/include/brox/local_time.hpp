#pragma once

#include <functional>
#include <vector>

#include "brox/monotone_map.hpp"
#include "brox/path.hpp"

namespace brox {

/// Occupation-kernel local time L(xi_m, y_j) on a space grid at a list of time stamps.
class LocalTimeField {
 public:
  LocalTimeField() = default;
  LocalTimeField(std::vector<double> space, std::vector<double> stamps, double epsilon,
                 std::vector<double> values);

  const std::vector<double>& space() const { return y_; }
  const std::vector<double>& stamps() const { return xi_; }
  double epsilon() const { return eps_; }

  double at(std::size_t stamp, std::size_t j) const { return v_[stamp * y_.size() + j]; }
  /// Linear interpolation in space; zero outside the grid.
  double at(std::size_t stamp, double y) const;
  /// Index of an exact stamp; LookupError when absent.
  std::size_t stamp_index(double xi) const;
  /// Index of the nearest stamp.
  std::size_t nearest_stamp(double xi) const;

 private:
  std::vector<double> y_, xi_;
  double eps_ = 0.0;
  std::vector<double> v_;  // row-major [stamp][space]
};

/// Box-kernel occupation estimator
///   L(xi, y) = (1 / 2 eps) * sum_k |[t_k, t_{k+1}) cap [0, xi)| * 1{|B(t_k) - y| <= eps}.
/// `space` and `stamps` must be increasing. Serial reference implementation.
LocalTimeField occupation_local_time(const SampledPath& b, double epsilon, std::vector<double> space,
                                     std::vector<double> stamps);
/// OpenMP version; deterministic for any thread count (fixed block decomposition).
LocalTimeField occupation_local_time_parallel(const SampledPath& b, double epsilon,
                                              std::vector<double> space, std::vector<double> stamps);

/// Default kernel half-width for a grid of step dt.
double default_epsilon(double dt);

/// L(eta, y) - L(xi, y); both stamps must be present.
double local_time_increment(const LocalTimeField& field, double xi, double eta, double y);

/// L_X(t, x) = e^{-W(x)} L_B(T^{-1}(t), S(x)) using the nearest stamp of the field.
double brox_local_time(const LocalTimeField& field_b, const PolygonalEnvironment& env,
                       const MonotoneMap& scale, const MonotoneMap& time_change, double t, double x);

/// | int_0^t f(path) ds  -  sum_j L(t, y_j) f(y_j) dy_j |, trapezoid weights on the field's grid.
double occupation_residual(const SampledPath& path, const LocalTimeField& field,
                           const std::function<double(double)>& f, double t);

}  // namespace brox
