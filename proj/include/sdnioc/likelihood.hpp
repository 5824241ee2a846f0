#pragma once

// Approximate likelihood of observed behavior under a model and gain
// schedule. The closed-loop pair (x_t, xhat_t) is not jointly Gaussian once
// noise is signal-dependent; each propagation step is therefore replaced by
// the Gaussian with the exact first two moments of the true pushforward
// (moment matching), after which factors and posteriors are exact Gaussian
// conditionals.
//
// Full observability: the experimenter sees the states x_t themselves; the
// belief tracked between factors is over xhat_t. Partial observability: the
// experimenter sees o_t = M x_t + N nu_t and the tracked belief is over the
// stacked (x_t, xhat_t).

#include <optional>
#include <vector>

#include "sdnioc/model.hpp"
#include "sdnioc/simulate.hpp"

namespace sdnioc {

struct GaussianBelief {
  dvec mean;
  dmat cov;

  Eigen::Index dim() const { return mean.size(); }
};

struct ConditionResult {
  double log_factor = 0.0;  // log N(observed; marginal of the observed block)
  GaussianBelief posterior;  // over the remaining block
};

// Conditions a joint Gaussian on its leading block taking the given value.
ConditionResult condition_gaussian(const GaussianBelief& joint, const dvec& observed_head,
                                   double jitter = 1e-9);

// Same, observing the trailing block.
ConditionResult condition_gaussian_tail(const GaussianBelief& joint,
                                        const dvec& observed_tail, double jitter = 1e-9);

// One step of the stacked dynamics z_{t+1} = f(x_t, xhat_t, noises) where
// z = (x, xhat) (full obs, J = 2m) or (x, xhat, o) (partial obs, J = 2m+s):
//   z_{t+1} = Fx x_t + Fxh xhat_t
//           + sum_i eps_i * (ctrl_embed C_i neg_gain) xhat_t
//           + sum_i ueps_i * (state_embed D_i) x_t
//           + Gamma w,   w standard normal.
struct JointDynamics {
  dmat Fx;           // J x m
  dmat Fxh;          // J x m
  dmat state_embed;  // J x k, multiplies D_i x
  dmat ctrl_embed;   // J x m, multiplies C_i u
  dmat neg_gain;     // p x m, equals -L_t
  dmat Gamma;        // J x q additive noise stack
  std::vector<dmat> C_list;
  std::vector<dmat> D_list;

  // Fused products, filled by finalize(): ctrl_terms[i] = ctrl_embed * C_i *
  // neg_gain, state_terms[i] = state_embed * D_i, Gamma_sq = Gamma Gamma^T.
  std::vector<dmat> ctrl_terms;
  std::vector<dmat> state_terms;
  dmat Gamma_sq;

  void finalize();
  Eigen::Index joint_dim() const { return Fx.rows(); }
};

JointDynamics build_joint_dynamics(const SystemModel& model, const GainSchedule& gains,
                                   std::size_t t);
JointDynamics build_joint_dynamics(const SystemModel& model, const ExperimenterModel& exp,
                                   const GainSchedule& gains, std::size_t t);

// Propagates a Gaussian belief over (x, xhat) through one step, returning the
// moment-matched Gaussian over the stacked output (dimension jd.joint_dim()).
GaussianBelief propagate_moment_matched(const JointDynamics& jd,
                                        const GaussianBelief& joint_belief);

// Full-observability convenience: x_t is known exactly, belief is over xhat_t.
GaussianBelief propagate_moment_matched(const JointDynamics& jd,
                                        const GaussianBelief& estimate_belief,
                                        const dvec& x_obs);

struct LoglikOptions {
  bool include_initial_state_factor = true;
  double jitter = 1e-9;
};

struct TrajectoryLoglik {
  double total = 0.0;
  std::vector<double> factors;           // T factors
  std::vector<GaussianBelief> beliefs;   // T beliefs (post-conditioning)
};

// Full observability; data = T x m matrix of states.
TrajectoryLoglik log_likelihood_trajectory(const SystemModel& model,
                                           const GainSchedule& gains, const dmat& states,
                                           const LoglikOptions& opts = {});

// Partial observability; data = T x s matrix of experimenter observations.
TrajectoryLoglik log_likelihood_trajectory(const SystemModel& model,
                                           const ExperimenterModel& exp,
                                           const GainSchedule& gains, const dmat& exp_obs,
                                           const LoglikOptions& opts = {});

// Sum over trials, in trial order (thread count never changes the result).
double log_likelihood_dataset(const SystemModel& model, const GainSchedule& gains,
                              const TrajectoryDataset& data, const LoglikOptions& opts = {},
                              int n_threads = 0);
double log_likelihood_dataset(const SystemModel& model, const ExperimenterModel& exp,
                              const GainSchedule& gains, const TrajectoryDataset& data,
                              const LoglikOptions& opts = {}, int n_threads = 0);

// Exact log-likelihood for models with no signal-dependent noise, written as
// plain linear-Gaussian filtering (independent of the moment-matching path).
// Throws ValidationError if the model has C or D terms.
double exact_linear_loglik(const SystemModel& model, const GainSchedule& gains,
                           const dmat& states, const LoglikOptions& opts = {});
double exact_linear_loglik(const SystemModel& model, const ExperimenterModel& exp,
                           const GainSchedule& gains, const dmat& exp_obs,
                           const LoglikOptions& opts = {});
double exact_linear_loglik_dataset(const SystemModel& model, const ExperimenterModel* exp,
                                   const GainSchedule& gains, const TrajectoryDataset& data,
                                   const LoglikOptions& opts = {});

// Unconditional per-step marginals of x_t (mean and covariance) under the
// closed loop, via iterated moment-matched propagation of the (x, xhat) joint.
std::vector<GaussianBelief> predict_state_distribution(const SystemModel& model,
                                                       const GainSchedule& gains);

// Baseline helper: strips C/D and inflates V V^T by the dataset-average
// signal-dependent control-noise covariance mean_t,i C_i u_t u_t^T C_i^T,
// so the additive model matches the average injected noise power.
SystemModel with_matched_additive_noise(const SystemModel& model,
                                        const TrajectoryDataset& data);

}  // namespace sdnioc
