#pragma once

// Forward control problem: alternating computation of control gains L_t
// (backward cost-to-go pass, given filter gains) and filter gains K_t
// (forward covariance pass, given control gains). With no signal-dependent
// noise the two passes decouple and reduce to the standard LQR/Kalman
// recursions; with it, alternation converges to a fixed point.

#include <vector>

#include "sdnioc/model.hpp"

namespace sdnioc {

// Cost-to-go decomposition: J_t(x, xhat) = x^T Vx_t x + e^T Ve_t e + s_t with
// e = x - xhat (expectations over future noise).
struct BackwardPass {
  std::vector<dmat> L;   // T slots, L[T-1] = 0
  std::vector<dmat> Vx;  // T slots
  std::vector<dmat> Ve;  // T slots
  std::vector<double> s;  // T slots
};

// Second-moment propagation of (e, xhat) under a fixed control law. Sig_xt
// holds raw second moments E[xhat xhat^T] (not centered covariances).
struct ForwardPass {
  std::vector<dmat> K;       // T slots, K[T-1] = 0
  std::vector<dmat> Sig_e;   // T slots, E[e e^T]
  std::vector<dmat> Sig_xt;  // T slots, E[xhat xhat^T]
  std::vector<dmat> Sig_xe;  // T slots, E[xhat e^T]
};

BackwardPass backward_pass(const SystemModel& model, const CostModel& cost,
                           const std::vector<dmat>& K_seq);

ForwardPass forward_pass(const SystemModel& model, const std::vector<dmat>& L_seq);

// E[J] for the gains used to produce `bp`; exact when the initial estimate
// equals the initial state mean and is deterministic.
double expected_cost(const SystemModel& model, const BackwardPass& bp);

struct SolveOptions {
  double tol = 1e-9;   // relative expected-cost change declaring convergence
  int max_iters = 50;  // alternations
};

struct SolveResult {
  GainSchedule gains;
  double expected_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;  // expected cost per alternation
};

SolveResult solve_gains(const SystemModel& model, const CostModel& cost,
                        const SolveOptions& opts = {});

std::vector<dmat> zero_gain_seq(std::size_t count, std::size_t rows, std::size_t cols);

}  // namespace sdnioc
