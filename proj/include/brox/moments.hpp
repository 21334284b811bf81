#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace brox {

/// p(t, x) = (2 pi t)^{-1/2} exp(-x^2 / 2t); DomainError for t <= 0.
double heat_kernel(double t, double x);
/// k-th derivative in x, k in {0, 1, 2}.
double heat_kernel_derivative(int k, double t, double x);

struct QuadratureOptions {
  double abs_tol = 1e-6;  ///< reported error must stay below this, else AccuracyError
  double rel_tol = 1e-9;  ///< per-level relative tolerance of the nested adaptive rule
  unsigned max_depth = 15;
};

struct QuadratureValue {
  double value = 0.0;
  double error = 0.0;
};

struct Window {
  double xi = 0.0;
  double eta = 1.0;
  double length() const { return eta - xi; }
};

/// int over xi < s_1 < ... < s_m < eta of prod_j k_j(s_j - s_{j-1}), s_0 = 0.
/// Each leg is integrated after s_j = s_{j-1} + (eta - s_{j-1}) sin^2(theta), which removes the
/// t^{-1/2} kernel singularity and the square-root behaviour at eta.
QuadratureValue simplex_chain(const std::vector<std::function<double(double)>>& kernels, Window w,
                              const QuadratureOptions& opt = {});

/// E[prod_k (L(eta, u_k) - L(xi, u_k))] for Brownian local time, m = points.size() <= 5.
QuadratureValue kac_moment(std::span<const double> points, Window w, const QuadratureOptions& opt = {},
                           bool allow_six = false);

using PointPair = std::pair<double, double>;

/// E[prod_k (L(y_k) - L(x_k))] over the window, via the corner sum of kac_moment.
QuadratureValue rect_increment_moment(std::span<const PointPair> pairs, Window w,
                                      const QuadratureOptions& opt = {});

/// E[(L(x) - L(y))^{2n}] from the single-chain representation with alternating kernels.
QuadratureValue increment_moment_closed_form(double x, double y, int n, Window w,
                                             const QuadratureOptions& opt = {});

struct ChainSpec {
  std::vector<int> e;     ///< binary, e.back() == 1
  std::vector<double> u;  ///< non-zero
  Window window;
  void validate() const;
};

/// Closed form of the derivative chain integral through the heat kernel / erfc representation.
QuadratureValue chain_integral(const ChainSpec& spec, const QuadratureOptions& opt = {});
/// Direct nested quadrature of the same integral over the simplex.
QuadratureValue chain_integral_direct(const ChainSpec& spec, const QuadratureOptions& opt = {});

enum class MomentKind { points, increments };

struct MomentQuery {
  MomentKind kind = MomentKind::points;
  std::vector<double> points;     // kind == points
  std::vector<PointPair> pairs;   // kind == increments, ordered x1<y1<=x2<y2<=...
  Window window;

  void validate() const;
  std::size_t order() const { return kind == MomentKind::points ? points.size() : pairs.size(); }
};

QuadratureValue exact_moment(const MomentQuery& q, const QuadratureOptions& opt = {});

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t paths = 0;
};

/// Monte Carlo estimate with the box-kernel local time of simulated Brownian paths.
/// Replica r uses the stream (seed, r). `parallel` selects the OpenMP kernel.
McEstimate mc_local_time_moment(const MomentQuery& q, std::int64_t n_paths, double dt, double epsilon,
                                std::uint64_t seed, bool parallel = true);

struct BoundRow {
  Window window;
  std::size_t config = 0;  ///< index into the configuration grid
  double value = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  std::vector<double> max_ratio;  ///< per window, the empirical constant
};

/// Ratios E[(L(x)-L(y))^{2n}] / (|eta-xi|^{n(1-beta)} |x-y|^{2 beta n}) over a grid of (x, y).
BoundReport verify_lxy_bound(int n, double beta, const std::vector<Window>& windows,
                             const std::vector<PointPair>& grid, const QuadratureOptions& opt = {});

/// Ratios |E prod (L(y_k)-L(x_k))| / (|eta-xi|^{n alpha} prod |y_k - x_k|^{1-alpha}).
BoundReport verify_lxyk_bound(double alpha, const std::vector<Window>& windows,
                              const std::vector<std::vector<PointPair>>& configs,
                              const QuadratureOptions& opt = {});

}  // namespace brox
