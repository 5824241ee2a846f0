#pragma once

// Derivative-free minimization over a box: quadratic interpolation models in
// a trust region, in the Powell style. Deterministic (no random sampling).

#include <functional>

#include "sdnioc/matrix.hpp"

namespace sdnioc {

struct DfoOptions {
  // Initial trust-region radius; <= 0 selects 0.25 * smallest box width.
  double rho_begin = -1.0;
  // Final radius: convergence is declared when the radius falls below this.
  double rho_end = 1e-6;
  int max_evals = 500;
  // Interpolation points retained for the model; <= 0 keeps the full
  // quadratic complement 1 + n + n(n+1)/2, and smaller counts (such as the
  // classic 2n+1) trade model quality for locality. Clamped to >= n + 2.
  int max_points = 0;
};

struct DfoResult {
  dvec x;
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

// Minimizes f over {lo <= x <= hi} starting from a feasible x0. Throws
// std::invalid_argument on an infeasible start, empty box, or a budget too
// small to build the first model (needs dim + 2 evaluations).
DfoResult minimize_dfo(const std::function<double(const dvec&)>& f, const dvec& x0,
                       const dvec& lo, const dvec& hi, const DfoOptions& opts = {});

}  // namespace sdnioc
