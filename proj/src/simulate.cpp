#include "sdnioc/simulate.hpp"

#include "sdnioc/rng.hpp"
#include "sdnioc/threads.hpp"

namespace sdnioc {

// Noise draw order per trial, from the state substream (seed, 0):
//   z_x1 (m), z_xhat1 (m), then per step t: omega (k), ueps (|D|),
//   and for t < T-1: xi (m), eps (|C|), eta (m).
// Experimenter observation noise nu (s per step) comes from the separate
// substream (seed, 1), so its presence never changes the state sequence.
Trajectory rollout(const SystemModel& model, const GainSchedule& gains, uint64_t seed,
                   const ExperimenterModel* exp) {
  const std::size_t m = model.state_dim, p = model.control_dim, k = model.obs_dim,
                    T = model.horizon;
  const std::size_t s = exp != nullptr ? exp->obs_dim() : 0;

  Rng rng = Rng::substream(seed, 0);
  Rng exp_rng = Rng::substream(seed, 1);

  Trajectory traj;
  traj.seed = seed;
  traj.states.resize(T, m);
  traj.estimates.resize(T, m);
  traj.controls.resize(T > 0 ? T - 1 : 0, p);
  traj.agent_obs.resize(T, k);
  if (exp != nullptr) traj.exp_obs.resize(T, s);

  const dmat sqrt_x1 = psd_sqrt(model.init_state_cov);
  const dmat sqrt_xh1 = psd_sqrt(model.init_estimate_cov);

  dvec x = model.init_state_mean + sqrt_x1 * rng.normal_vec(m);
  dvec xh = model.init_estimate_mean + sqrt_xh1 * rng.normal_vec(m);

  for (std::size_t t = 0; t < T; ++t) {
    traj.states.row(t) = x.transpose();
    traj.estimates.row(t) = xh.transpose();

    const dmat& H = model.H.at(t);
    dvec y = H * x + model.W * rng.normal_vec(k);
    for (const dmat& D : model.D_list) y += rng.normal() * (D * x);
    traj.agent_obs.row(t) = y.transpose();

    if (exp != nullptr)
      traj.exp_obs.row(t) = (exp->M * x + exp->N * exp_rng.normal_vec(s)).transpose();

    if (t + 1 >= T) break;

    const dmat& A = model.A.at(t);
    const dmat& B = model.B.at(t);
    const dvec u = -(gains.L.at(t) * xh);
    traj.controls.row(t) = u.transpose();

    dvec x_next = A * x + B * u + model.V * rng.normal_vec(m);
    for (const dmat& C : model.C_list) x_next += rng.normal() * (C * u);

    const dvec xh_next = A * xh + B * u + gains.K.at(t) * (y - H * xh) +
                         model.E * rng.normal_vec(m);

    x = x_next;
    xh = xh_next;
  }
  return traj;
}

TrajectoryDataset rollout_batch(const SystemModel& model, const GainSchedule& gains,
                                std::size_t n_trials, uint64_t seed,
                                const ExperimenterModel* exp, int n_threads) {
  TrajectoryDataset data;
  data.seed = seed;
  data.trials.resize(n_trials);
  parallel_for(n_trials, n_threads, [&](std::size_t i) {
    data.trials[i] = rollout(model, gains, Rng::derive_seed(seed, i), exp);
  });
  return data;
}

}  // namespace sdnioc
