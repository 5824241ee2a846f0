#include "sdnioc/solver.hpp"

#include <cmath>
#include <limits>

namespace sdnioc {

std::vector<dmat> zero_gain_seq(std::size_t count, std::size_t rows, std::size_t cols) {
  return std::vector<dmat>(count, dmat::Zero(rows, cols));
}

// Cost-to-go recursion, t = T-2 .. 0, with V^x_T = Q_T, V^e_T = 0:
//   P_t   = R_t + B^T V^x B + sum_i C_i^T (V^x + V^e) C_i          (next-step V's)
//   L_t   = P_t^{-1} B^T V^x A
//   V^x_t = Q_t + A^T V^x (A - B L_t) + sum_i D_i^T K_t^T V^e K_t D_i
//   V^e_t = A^T V^x B L_t + (A - K_t H)^T V^e (A - K_t H)
//   s_t   = tr(V^x VV^T) + tr(V^e (VV^T + EE^T + K_t WW^T K_t^T)) + s_{t+1}
BackwardPass backward_pass(const SystemModel& model, const CostModel& cost,
                           const std::vector<dmat>& K_seq) {
  const std::size_t m = model.state_dim, p = model.control_dim, T = model.horizon;
  BackwardPass bp;
  bp.L.assign(T, dmat::Zero(p, m));
  bp.Vx.assign(T, dmat());
  bp.Ve.assign(T, dmat());
  bp.s.assign(T, 0.0);

  bp.Vx[T - 1] = symmetrized(cost.Q.at(T - 1));
  bp.Ve[T - 1] = dmat::Zero(m, m);

  const dmat VVt = model.V * model.V.transpose();
  const dmat EEt = model.E * model.E.transpose();
  const dmat WWt = model.W * model.W.transpose();

  for (std::size_t ti = T - 1; ti-- > 0;) {
    const dmat& A = model.A.at(ti);
    const dmat& B = model.B.at(ti);
    const dmat& H = model.H.at(ti);
    const dmat& K = K_seq.at(ti);
    const dmat& Vx1 = bp.Vx[ti + 1];
    const dmat& Ve1 = bp.Ve[ti + 1];

    dmat P = cost.R.at(ti) + B.transpose() * Vx1 * B;
    if (!model.C_list.empty()) {
      const dmat Vsum = Vx1 + Ve1;
      for (const dmat& C : model.C_list) P += C.transpose() * Vsum * C;
    }
    bp.L[ti] = spd_solve(P, B.transpose() * Vx1 * A, 1e-12, "control gain");

    dmat Vx = cost.Q.at(ti) + A.transpose() * Vx1 * (A - B * bp.L[ti]);
    if (!model.D_list.empty()) {
      const dmat KtVeK = K.transpose() * Ve1 * K;
      for (const dmat& D : model.D_list) Vx += D.transpose() * KtVeK * D;
    }
    bp.Vx[ti] = symmetrized(Vx);

    const dmat AKH = A - K * H;
    bp.Ve[ti] = symmetrized(A.transpose() * Vx1 * B * bp.L[ti] +
                            AKH.transpose() * Ve1 * AKH);

    bp.s[ti] = (Vx1 * VVt).trace() +
               (Ve1 * (VVt + EEt + K * WWt * K.transpose())).trace() + bp.s[ti + 1];
  }
  return bp;
}

double expected_cost(const SystemModel& model, const BackwardPass& bp) {
  const dvec& xh = model.init_estimate_mean;
  return xh.dot(bp.Vx[0] * xh) +
         ((bp.Vx[0] + bp.Ve[0]) * model.init_state_cov).trace() + bp.s[0];
}

// Second moments of (e, xhat) under u = -L xhat, t = 0 .. T-2:
//   S_t    = H Sig^e H^T + WW^T + sum_i D_i E[x x^T] D_i^T
//   K_t    = A Sig^e H^T S_t^{-1}
//   Sig^e' = VV^T + EE^T + (A - K_t H) Sig^e A^T + sum_i C_i L Sig^xh L^T C_i^T
//   Sig^xh'= EE^T + K_t H Sig^e A^T + F Sig^xh F^T + F Sig^xe H^T K_t^T
//            + K_t H Sig^ex F^T,   F = A - B L
//   Sig^xe'= F Sig^xe (A - K_t H)^T - EE^T
// where E[x x^T] = Sig^e + Sig^xh + Sig^xe + Sig^ex. The Sig^e and Sig^xh
// updates use the optimality of K_t computed in the same step.
ForwardPass forward_pass(const SystemModel& model, const std::vector<dmat>& L_seq) {
  const std::size_t m = model.state_dim, k = model.obs_dim, T = model.horizon;
  ForwardPass fp;
  fp.K.assign(T, dmat::Zero(m, k));
  fp.Sig_e.assign(T, dmat());
  fp.Sig_xt.assign(T, dmat());
  fp.Sig_xe.assign(T, dmat());

  // General initialization: raw second moments for independent x_1, xhat_1.
  const dvec delta = model.init_state_mean - model.init_estimate_mean;
  const dvec& xh = model.init_estimate_mean;
  fp.Sig_e[0] = symmetrized(model.init_state_cov + model.init_estimate_cov +
                            delta * delta.transpose());
  fp.Sig_xt[0] = symmetrized(model.init_estimate_cov + xh * xh.transpose());
  fp.Sig_xe[0] = xh * delta.transpose() - model.init_estimate_cov;

  const dmat VVt = model.V * model.V.transpose();
  const dmat EEt = model.E * model.E.transpose();
  const dmat WWt = model.W * model.W.transpose();

  for (std::size_t t = 0; t + 1 < T; ++t) {
    const dmat& A = model.A.at(t);
    const dmat& B = model.B.at(t);
    const dmat& H = model.H.at(t);
    const dmat& L = L_seq.at(t);
    const dmat& Se = fp.Sig_e[t];
    const dmat& Sxt = fp.Sig_xt[t];
    const dmat& Sxe = fp.Sig_xe[t];

    dmat S = H * Se * H.transpose() + WWt;
    if (!model.D_list.empty()) {
      const dmat Sxx = Se + Sxt + Sxe + Sxe.transpose();
      for (const dmat& D : model.D_list) S += D * Sxx * D.transpose();
    }
    // K = A Se H^T S^{-1}, via S X = H Se A^T then K = X^T.
    fp.K[t] = spd_solve(S, H * Se * A.transpose(), 1e-12, "filter gain").transpose();
    const dmat& K = fp.K[t];

    const dmat AKH = A - K * H;
    const dmat F = A - B * L;

    dmat Se1 = VVt + EEt + AKH * Se * A.transpose();
    for (const dmat& C : model.C_list)
      Se1 += C * L * Sxt * L.transpose() * C.transpose();
    fp.Sig_e[t + 1] = symmetrized(Se1);

    const dmat KHSeAt = K * H * Se * A.transpose();
    const dmat FSxeHtKt = F * Sxe * H.transpose() * K.transpose();
    fp.Sig_xt[t + 1] = symmetrized(EEt + KHSeAt + F * Sxt * F.transpose() +
                                   FSxeHtKt + FSxeHtKt.transpose());

    fp.Sig_xe[t + 1] = F * Sxe * AKH.transpose() - EEt;
  }
  return fp;
}

SolveResult solve_gains(const SystemModel& model, const CostModel& cost,
                        const SolveOptions& opts) {
  const std::size_t m = model.state_dim, k = model.obs_dim, T = model.horizon;
  SolveResult out;
  std::vector<dmat> K_seq = zero_gain_seq(T, m, k);
  BackwardPass bp;
  double prev = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    bp = backward_pass(model, cost, K_seq);
    const double cost_now = expected_cost(model, bp);
    out.cost_trace.push_back(cost_now);
    out.iterations = iter;

    ForwardPass fp = forward_pass(model, bp.L);
    K_seq = std::move(fp.K);

    if (iter >= 2 &&
        std::abs(cost_now - prev) <= opts.tol * std::max(1.0, std::abs(prev))) {
      out.converged = true;
      break;
    }
    prev = cost_now;
  }

  out.gains.L = bp.L;
  out.gains.K = std::move(K_seq);
  out.expected_cost = out.cost_trace.back();
  return out;
}

}  // namespace sdnioc
