#pragma once

#include <cstdint>

#include "brox/brox.hpp"

namespace brox {

/// Solution of dM = exp(W(S^{-1}(M))) dcalB, M(0) = 0, on the grid of calB.
struct AuxiliarySolution {
  SampledPath m;
  double k_trunc = 0.0;   ///< final truncation level (in x)
  int escalations = 0;
};

struct StrongOptions {
  double k_trunc = 2.0;
  int max_escalations = 12;
};

/// Euler-Maruyama with the coefficient frozen outside [S(-k), S(k)]; when M leaves that interval
/// k doubles (the environment grows with it) and the scheme continues with the larger coefficient.
AuxiliarySolution solve_m(const EnvironmentSource& source, const SampledPath& calb,
                          const StrongOptions& opt = {});

struct TimeChangeResult {
  MonotoneMap u;    ///< U(s) = int_0^s exp(2 W(S^{-1}(M))) : calB-time -> B-time
  MonotoneMap tau;  ///< inverse of U
  SampledPath b;    ///< B = M o tau at the nodes U(s_j)
};

TimeChangeResult compute_tau_and_b(const AuxiliarySolution& sol, const MonotoneMap& scale);

/// X = S^{-1}(M) on the grid of M.
SampledPath strong_path(const MonotoneMap& scale, const AuxiliarySolution& sol);

struct RoundtripResult {
  double sup_x_error = 0.0;  ///< sup_{t<=horizon} |X_strong - X_IMK|
  double sup_b_error = 0.0;  ///< sup over recovered nodes |B_rec(u) - B(u)|
  int escalations = 0;
};

/// Builds X_IMK and calB from the given (fine) B on the output grid, solves the strong equation
/// from calB, and compares X and the recovered B against the originals.
RoundtripResult roundtrip_error(const EnvironmentSource& source, const SampledPath& b, const TimeGrid& out,
                                const StrongOptions& opt = {}, const SimulationOptions& sim = {});

}  // namespace brox
