#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "brox/local_time.hpp"
#include "brox/monotone_map.hpp"
#include "brox/path.hpp"

namespace brox {

/// Integrand g(x, u) evaluated along u = W(x), with its partial derivatives.
struct TestFunction {
  std::function<double(double, double)> g;
  std::function<double(double, double)> dg_du;
  std::function<double(double, double)> dg_dx;
  std::function<double(double, double)> d2g_du2;  ///< optional; needed to differentiate in u once more
  double theta = 0.0;   ///< growth exponent, |g| <= c e^{theta |x|}
  double lambda = 0.5;  ///< Hoelder exponent in x

  static TestFunction constant(double c = 1.0);
  static TestFunction exp_u();
  /// g(x, u) e^{-u}, the weight seen by the Brownian local time.
  TestFunction damped() const;
  /// d/du g as a test function (requires d2g_du2).
  TestFunction du() const;
  /// Max abs difference between the declared derivatives and central differences on a probe grid.
  double derivative_mismatch(double step = 1e-5) const;
};

/// Throws ConfigError when derivative_mismatch exceeds tol.
void check_test_function(const TestFunction& f, double tol = 1e-5);

/// Environment window of at least the given radius. Sources are deterministic.
using EnvironmentSource = std::function<TwoSidedEnvironment(double radius)>;

EnvironmentSource brownian_environment(const EnvironmentStreams& streams, double h);
/// Fixed environment; larger radii raise ExtentError.
EnvironmentSource fixed_environment(TwoSidedEnvironment env);
EnvironmentSource function_environment(double h, std::function<double(double)> w);

struct AdaptiveParams {
  double delta = 1.0;
  double kappa = 1.0;
  double gamma = 0.5;
  std::function<double(int)> c3 = [](int) { return 1.0; };
};

/// Per unit interval [N-1, N], mesh (delta 2^{-|N|-2} / c3(N))^{6/gamma} e^{-kappa |N| / gamma},
/// rounded down to a multiple of h (1/h must be an integer).
Partition adaptive_partition(const AdaptiveParams& p, double h, double a, double b);

struct PartitionRule {
  enum class Kind { grid, uniform, adaptive };
  Kind kind = Kind::grid;
  double mesh = 0.0;
  AdaptiveParams adaptive;

  static PartitionRule grid() { return {}; }
  static PartitionRule uniform(double mesh) { return {Kind::uniform, mesh, {}}; }
};

/// Polygonal view of the environment on [-x_max, x_max].
PolygonalEnvironment make_view(const TwoSidedEnvironment& env, const PartitionRule& rule);

struct BroxRealization {
  TwoSidedEnvironment env;
  PolygonalEnvironment view;  ///< W, or W_pi for a polygonal realization
  MonotoneMap scale;
  MonotoneMap time_change;
  SampledPath b;          ///< Brownian motion in its own clock u
  std::vector<double> calb_nodes;  ///< driving Brownian motion at the nodes of b
  SampledPath x;          ///< output grid
  SampledPath calb;       ///< output grid
  std::vector<double> xi;  ///< T^{-1}(t_k) on the output grid
};

struct SimulationOptions {
  double initial_radius = 4.0;
  int max_doublings = 10;
  /// Headroom required between the range of B and the ends of S; must exceed the local-time
  /// kernel half-width used later on the realization.
  double margin = 0.25;
};

/// Brownian motion sampled with steps du_k = e^{2 W(S^{-1}(B_k))} dt, so that T(u_k) = k dt.
/// Throws ExtentError when B leaves the range of the scale function.
SampledPath sample_clocked_brownian(const MonotoneMap& scale, const GaussianStream& rng, double dt,
                                    std::int64_t steps);

/// int e^{-W(S^{-1}(B))} dB at the nodes of b, left-point sums.
std::vector<double> driving_bm(const MonotoneMap& scale, const SampledPath& b);

/// Ito-McKean construction X = S^{-1}(B(T^{-1}(t))) and the driving Brownian motion on `out`,
/// for a given B. The window grows (doubling) until B stays inside S.
BroxRealization itomckean_path(const EnvironmentSource& source, const PartitionRule& rule,
                               const SampledPath& b, const TimeGrid& out,
                               const SimulationOptions& opt = {});

/// Realization with B sampled on the clock of the (viewed) environment, `substeps` B-steps per
/// output step.
BroxRealization simulate_brox(const EnvironmentSource& source, const PartitionRule& rule,
                              const GaussianStream& rng, const TimeGrid& out, std::int64_t substeps = 1,
                              const SimulationOptions& opt = {});

/// Realized quadratic variation of a path over [0, t].
double realized_qv(const SampledPath& p, double t);

/// int_a^b f(x, W(x)) L(xi, S(x)) W(d°x) on the view's nodes: Ito sums oriented away from 0 plus the
/// +-1/2 sum d_u f L (dW)^2 correction, (dW)^2 being the realized quadratic variation of the cell.
/// The field's space grid should be the scale's values.
double stratonovich_integral(const TestFunction& f, const PolygonalEnvironment& view,
                             const MonotoneMap& scale, const LocalTimeField& field, std::size_t stamp,
                             double a, double b);

/// sum over segments of the partition of slope_pi * int_{seg} f(x, W(x)) L(xi, S(x)) dx,
/// the inner integral by the trapezoid rule on the fine view.
double stratonovich_riemann(const TestFunction& f, const PolygonalEnvironment& view,
                            const MonotoneMap& scale, const LocalTimeField& field, std::size_t stamp,
                            const PolygonalEnvironment& coarse);

struct DriftSeries {
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> xi;
  std::vector<double> radius;
};

/// int g(x, W(x)) L_X(t, x) W(d°x) at each requested t (g = 1 gives the drift of the equation).
/// The local time of B uses the box kernel of half-width epsilon on the scale's grid.
DriftSeries drift_integral(const TestFunction& g, const BroxRealization& r, std::span<const double> times,
                           double epsilon);
/// Same through the Riemann sums over a coarse polygonal environment (cross-route).
DriftSeries drift_integral_riemann(const TestFunction& g, const BroxRealization& r,
                                   const PolygonalEnvironment& coarse, std::span<const double> times,
                                   double epsilon);
/// For a polygonal realization: sum_k g(X_k, W_pi(X_k)) W_pi'(X_k) dt along the output grid.
DriftSeries drift_integral_polygonal(const TestFunction& g, const BroxRealization& r,
                                     std::span<const double> times);

/// |X(t) - calB(t) + drift(t)/2| at the output grid point t.
double equation_residual(const BroxRealization& r, const DriftSeries& drift, double t);

/// F(x) = int_0^x f(y, W(y)) dy, Gauss-Legendre on each segment of the view.
double antiderivative(const TestFunction& f, const PolygonalEnvironment& view, double x);

/// |F(X(t)) - sum f dcalB - 1/2 int d_x f ds + 1/2 strat(f) - 1/2 strat(d_u f)| at t.
double ito_formula_residual(const TestFunction& f, const BroxRealization& r, double t, double epsilon);

}  // namespace brox
