#include "sdnioc/likelihood.hpp"

#include <sstream>

#include "sdnioc/threads.hpp"

namespace sdnioc {
namespace {

void require(bool cond, const char* what) {
  if (!cond) throw ValidationError(what);
}

void require_data(const dmat& data, std::size_t rows, std::size_t cols,
                  const char* what) {
  if (static_cast<std::size_t>(data.rows()) != rows ||
      static_cast<std::size_t>(data.cols()) != cols || !data.allFinite()) {
    std::ostringstream os;
    os << what << ": expected finite " << rows << "x" << cols << " data, got "
       << data.rows() << "x" << data.cols();
    throw ValidationError(os.str());
  }
}

// Initial joint over (x_1, xhat_1): independent blocks.
GaussianBelief initial_joint(const SystemModel& model) {
  const std::size_t m = model.state_dim;
  GaussianBelief b;
  b.mean.resize(2 * m);
  b.mean.head(m) = model.init_state_mean;
  b.mean.tail(m) = model.init_estimate_mean;
  b.cov = dmat::Zero(2 * m, 2 * m);
  b.cov.topLeftCorner(m, m) = model.init_state_cov;
  b.cov.bottomRightCorner(m, m) = model.init_estimate_cov;
  return b;
}

// Extends a belief over z = (x, xhat) with o = M x + N nu and conditions on
// the observed value. Returns the marginal factor and the posterior over z.
ConditionResult observe_linear(const GaussianBelief& z, const ExperimenterModel& exp,
                               const dvec& obs, double jitter) {
  const Eigen::Index n = z.dim();
  const Eigen::Index m = exp.M.cols();
  const Eigen::Index s = exp.M.rows();
  GaussianBelief joint;
  joint.mean.resize(n + s);
  joint.mean.head(n) = z.mean;
  joint.mean.tail(s) = exp.M * z.mean.head(m);
  joint.cov.resize(n + s, n + s);
  const dmat cross = z.cov.leftCols(m) * exp.M.transpose();  // cov(z, o)
  joint.cov.topLeftCorner(n, n) = z.cov;
  joint.cov.topRightCorner(n, s) = cross;
  joint.cov.bottomLeftCorner(s, n) = cross.transpose();
  joint.cov.bottomRightCorner(s, s) = symmetrized(
      exp.M * z.cov.topLeftCorner(m, m) * exp.M.transpose() +
      exp.N * exp.N.transpose());
  return condition_gaussian_tail(joint, obs, jitter);
}

}  // namespace

ConditionResult condition_gaussian(const GaussianBelief& joint, const dvec& observed_head,
                                   double jitter) {
  const Eigen::Index n = joint.dim();
  const Eigen::Index no = observed_head.size();
  require(no >= 1 && no <= n, "condition_gaussian: bad observed block size");
  const Eigen::Index nl = n - no;

  const dmat Soo = joint.cov.topLeftCorner(no, no);
  SpdChol f = spd_factor(Soo, jitter, "conditioning marginal");
  const dvec r = observed_head - joint.mean.head(no);

  ConditionResult out;
  out.log_factor =
      -0.5 * (r.dot(f.solve(r)) + f.log_det + static_cast<double>(no) * kLogTwoPi);
  if (nl > 0) {
    const dmat Sol = joint.cov.topRightCorner(no, nl);
    const dmat gain = f.solve(Sol).transpose();  // nl x no
    out.posterior.mean = joint.mean.tail(nl) + gain * r;
    out.posterior.cov =
        symmetrized(joint.cov.bottomRightCorner(nl, nl) - gain * Sol);
  } else {
    out.posterior.mean.resize(0);
    out.posterior.cov.resize(0, 0);
  }
  return out;
}

ConditionResult condition_gaussian_tail(const GaussianBelief& joint,
                                        const dvec& observed_tail, double jitter) {
  const Eigen::Index n = joint.dim();
  const Eigen::Index no = observed_tail.size();
  require(no >= 1 && no <= n, "condition_gaussian_tail: bad observed block size");
  const Eigen::Index nl = n - no;

  const dmat Soo = joint.cov.bottomRightCorner(no, no);
  SpdChol f = spd_factor(Soo, jitter, "conditioning marginal");
  const dvec r = observed_tail - joint.mean.tail(no);

  ConditionResult out;
  out.log_factor =
      -0.5 * (r.dot(f.solve(r)) + f.log_det + static_cast<double>(no) * kLogTwoPi);
  if (nl > 0) {
    const dmat Sol = joint.cov.bottomLeftCorner(no, nl);  // cov(o, latent)
    const dmat gain = f.solve(Sol).transpose();           // nl x no
    out.posterior.mean = joint.mean.head(nl) + gain * r;
    out.posterior.cov = symmetrized(joint.cov.topLeftCorner(nl, nl) - gain * Sol);
  } else {
    out.posterior.mean.resize(0);
    out.posterior.cov.resize(0, 0);
  }
  return out;
}

void JointDynamics::finalize() {
  const Eigen::Index J = Fx.rows();
  ctrl_terms.clear();
  state_terms.clear();
  ctrl_terms.reserve(C_list.size());
  state_terms.reserve(D_list.size());
  for (const dmat& C : C_list) ctrl_terms.push_back(ctrl_embed * C * neg_gain);
  for (const dmat& D : D_list) state_terms.push_back(state_embed * D);
  Gamma_sq = Gamma * Gamma.transpose();
  (void)J;
}

JointDynamics build_joint_dynamics(const SystemModel& model, const GainSchedule& gains,
                                   std::size_t t) {
  const std::size_t m = model.state_dim, k = model.obs_dim;
  const dmat& A = model.A.at(t);
  const dmat& B = model.B.at(t);
  const dmat& H = model.H.at(t);
  const dmat& K = gains.K.at(t);
  const dmat& L = gains.L.at(t);
  const Eigen::Index J = 2 * static_cast<Eigen::Index>(m);

  JointDynamics jd;
  const dmat BL = B * L;
  const dmat KH = K * H;
  jd.Fx.resize(J, m);
  jd.Fx.topRows(m) = A;
  jd.Fx.bottomRows(m) = KH;
  jd.Fxh.resize(J, m);
  jd.Fxh.topRows(m) = -BL;
  jd.Fxh.bottomRows(m) = A - BL - KH;
  jd.state_embed = dmat::Zero(J, k);
  jd.state_embed.bottomRows(m) = K;
  jd.ctrl_embed = dmat::Zero(J, m);
  jd.ctrl_embed.topRows(m).setIdentity();
  jd.neg_gain = -L;
  jd.Gamma = dmat::Zero(J, m + k + m);
  jd.Gamma.topLeftCorner(m, m) = model.V;
  jd.Gamma.block(m, m, m, k) = K * model.W;
  jd.Gamma.bottomRightCorner(m, m) = model.E;
  jd.C_list = model.C_list;
  jd.D_list = model.D_list;
  jd.finalize();
  return jd;
}

JointDynamics build_joint_dynamics(const SystemModel& model, const ExperimenterModel& exp,
                                   const GainSchedule& gains, std::size_t t) {
  const std::size_t m = model.state_dim, k = model.obs_dim;
  const std::size_t s = exp.obs_dim();
  const dmat& A = model.A.at(t);
  const dmat& B = model.B.at(t);
  const dmat& H = model.H.at(t);
  const dmat& K = gains.K.at(t);
  const dmat& L = gains.L.at(t);
  const Eigen::Index J = static_cast<Eigen::Index>(2 * m + s);

  JointDynamics jd;
  const dmat BL = B * L;
  const dmat KH = K * H;
  jd.Fx = dmat(J, m);
  jd.Fx.topRows(m) = A;
  jd.Fx.middleRows(m, m) = KH;
  jd.Fx.bottomRows(s) = exp.M * A;
  jd.Fxh = dmat(J, m);
  jd.Fxh.topRows(m) = -BL;
  jd.Fxh.middleRows(m, m) = A - BL - KH;
  jd.Fxh.bottomRows(s) = -exp.M * BL;
  jd.state_embed = dmat::Zero(J, k);
  jd.state_embed.middleRows(m, m) = K;
  jd.ctrl_embed = dmat::Zero(J, m);
  jd.ctrl_embed.topRows(m).setIdentity();
  jd.ctrl_embed.bottomRows(s) = exp.M;
  jd.neg_gain = -L;
  jd.Gamma = dmat::Zero(J, m + k + m + s);
  jd.Gamma.topLeftCorner(m, m) = model.V;
  jd.Gamma.block(m, m, m, k) = K * model.W;
  jd.Gamma.block(m, m + k, m, m) = model.E;
  jd.Gamma.block(2 * m, 0, s, m) = exp.M * model.V;
  jd.Gamma.bottomRightCorner(s, s) = exp.N;
  jd.C_list = model.C_list;
  jd.D_list = model.D_list;
  jd.finalize();
  return jd;
}

// Moment matching: with z = (x, xhat), mu = E[z], Sig = Cov[z],
//   mean' = Fx mu_x + Fxh mu_xh
//   cov'  = [Fx Fxh] Sig [Fx Fxh]^T
//         + sum_i (state_embed D_i) E[x x^T] (state_embed D_i)^T
//         + sum_i (ctrl_embed C_i neg_gain) E[xh xh^T] (...)^T
//         + Gamma Gamma^T
// E[..] are raw second moments; these are the exact first two moments of the
// signal-dependent pushforward.
GaussianBelief propagate_moment_matched(const JointDynamics& jd,
                                        const GaussianBelief& joint_belief) {
  const Eigen::Index m = jd.Fx.cols();
  require(joint_belief.dim() == 2 * m, "propagate: belief must cover (x, xhat)");
  const auto mu_x = joint_belief.mean.head(m);
  const auto mu_h = joint_belief.mean.tail(m);

  GaussianBelief out;
  out.mean = jd.Fx * mu_x + jd.Fxh * mu_h;

  dmat F(jd.Fx.rows(), 2 * m);
  F.leftCols(m) = jd.Fx;
  F.rightCols(m) = jd.Fxh;
  dmat cov = F * joint_belief.cov * F.transpose() + jd.Gamma_sq;

  if (!jd.state_terms.empty()) {
    const dmat Sxx =
        joint_belief.cov.topLeftCorner(m, m) + mu_x * mu_x.transpose();
    for (const dmat& G : jd.state_terms) cov += G * Sxx * G.transpose();
  }
  if (!jd.ctrl_terms.empty()) {
    const dmat Shh =
        joint_belief.cov.bottomRightCorner(m, m) + mu_h * mu_h.transpose();
    for (const dmat& G : jd.ctrl_terms) cov += G * Shh * G.transpose();
  }
  out.cov = symmetrized(cov);
  return out;
}

GaussianBelief propagate_moment_matched(const JointDynamics& jd,
                                        const GaussianBelief& estimate_belief,
                                        const dvec& x_obs) {
  const Eigen::Index m = jd.Fx.cols();
  require(estimate_belief.dim() == m && x_obs.size() == m,
          "propagate: estimate belief and observed state must have state dim");

  GaussianBelief out;
  out.mean = jd.Fx * x_obs + jd.Fxh * estimate_belief.mean;
  dmat cov = jd.Fxh * estimate_belief.cov * jd.Fxh.transpose() + jd.Gamma_sq;
  if (!jd.state_terms.empty()) {
    const dmat Sxx = x_obs * x_obs.transpose();
    for (const dmat& G : jd.state_terms) cov += G * Sxx * G.transpose();
  }
  if (!jd.ctrl_terms.empty()) {
    const dmat Shh = estimate_belief.cov +
                     estimate_belief.mean * estimate_belief.mean.transpose();
    for (const dmat& G : jd.ctrl_terms) cov += G * Shh * G.transpose();
  }
  out.cov = symmetrized(cov);
  return out;
}

namespace {

// Shared per-timestep structures: building them once per dataset instead of
// once per trajectory dominates the cost of batched likelihoods.
std::vector<JointDynamics> full_obs_steps(const SystemModel& model,
                                          const GainSchedule& gains) {
  std::vector<JointDynamics> steps;
  steps.reserve(model.horizon > 0 ? model.horizon - 1 : 0);
  for (std::size_t t = 0; t + 1 < model.horizon; ++t)
    steps.push_back(build_joint_dynamics(model, gains, t));
  return steps;
}

std::vector<JointDynamics> partial_obs_steps(const SystemModel& model,
                                             const ExperimenterModel& exp,
                                             const GainSchedule& gains) {
  std::vector<JointDynamics> steps;
  steps.reserve(model.horizon > 0 ? model.horizon - 1 : 0);
  for (std::size_t t = 0; t + 1 < model.horizon; ++t)
    steps.push_back(build_joint_dynamics(model, exp, gains, t));
  return steps;
}

TrajectoryLoglik full_obs_loglik(const SystemModel& model,
                                 const std::vector<JointDynamics>& steps,
                                 const dmat& states, const LoglikOptions& opts) {
  const std::size_t m = model.state_dim, T = model.horizon;
  require_data(states, T, m, "states");

  TrajectoryLoglik out;
  out.factors.reserve(T);
  out.beliefs.reserve(T);

  const dvec x0 = states.row(0).transpose();
  double first = 0.0;
  if (opts.include_initial_state_factor)
    first = gaussian_logpdf(x0, model.init_state_mean, model.init_state_cov,
                            opts.jitter, "initial state factor");
  out.factors.push_back(first);

  GaussianBelief belief{model.init_estimate_mean, model.init_estimate_cov};
  out.beliefs.push_back(belief);

  for (std::size_t t = 0; t + 1 < T; ++t) {
    const GaussianBelief joint =
        propagate_moment_matched(steps[t], belief, states.row(t).transpose());
    ConditionResult cr =
        condition_gaussian(joint, states.row(t + 1).transpose(), opts.jitter);
    out.factors.push_back(cr.log_factor);
    belief = std::move(cr.posterior);
    out.beliefs.push_back(belief);
  }
  for (double f : out.factors) out.total += f;
  return out;
}

TrajectoryLoglik partial_obs_loglik(const SystemModel& model,
                                    const ExperimenterModel& exp,
                                    const std::vector<JointDynamics>& steps,
                                    const dmat& exp_obs, const LoglikOptions& opts) {
  const std::size_t T = model.horizon, s = exp.obs_dim();
  require_data(exp_obs, T, s, "experimenter observations");

  TrajectoryLoglik out;
  out.factors.reserve(T);
  out.beliefs.reserve(T);

  GaussianBelief joint0 = initial_joint(model);
  ConditionResult cr =
      observe_linear(joint0, exp, exp_obs.row(0).transpose(), opts.jitter);
  out.factors.push_back(cr.log_factor);
  GaussianBelief belief = std::move(cr.posterior);
  out.beliefs.push_back(belief);

  for (std::size_t t = 0; t + 1 < T; ++t) {
    const GaussianBelief joint = propagate_moment_matched(steps[t], belief);
    cr = condition_gaussian_tail(joint, exp_obs.row(t + 1).transpose(), opts.jitter);
    out.factors.push_back(cr.log_factor);
    belief = std::move(cr.posterior);
    out.beliefs.push_back(belief);
  }
  for (double f : out.factors) out.total += f;
  return out;
}

}  // namespace

TrajectoryLoglik log_likelihood_trajectory(const SystemModel& model,
                                           const GainSchedule& gains, const dmat& states,
                                           const LoglikOptions& opts) {
  return full_obs_loglik(model, full_obs_steps(model, gains), states, opts);
}

TrajectoryLoglik log_likelihood_trajectory(const SystemModel& model,
                                           const ExperimenterModel& exp,
                                           const GainSchedule& gains, const dmat& exp_obs,
                                           const LoglikOptions& opts) {
  return partial_obs_loglik(model, exp, partial_obs_steps(model, exp, gains), exp_obs,
                            opts);
}

double log_likelihood_dataset(const SystemModel& model, const GainSchedule& gains,
                              const TrajectoryDataset& data, const LoglikOptions& opts,
                              int n_threads) {
  require(!data.trials.empty(), "log_likelihood_dataset: empty dataset");
  const std::vector<JointDynamics> steps = full_obs_steps(model, gains);
  std::vector<double> per_trial(data.trials.size());
  parallel_for(data.trials.size(), n_threads, [&](std::size_t i) {
    per_trial[i] = full_obs_loglik(model, steps, data.trials[i].states, opts).total;
  });
  double total = 0.0;
  for (double v : per_trial) total += v;  // fixed order: thread-count invariant
  return total;
}

double log_likelihood_dataset(const SystemModel& model, const ExperimenterModel& exp,
                              const GainSchedule& gains, const TrajectoryDataset& data,
                              const LoglikOptions& opts, int n_threads) {
  require(!data.trials.empty(), "log_likelihood_dataset: empty dataset");
  const std::vector<JointDynamics> steps = partial_obs_steps(model, exp, gains);
  std::vector<double> per_trial(data.trials.size());
  parallel_for(data.trials.size(), n_threads, [&](std::size_t i) {
    per_trial[i] =
        partial_obs_loglik(model, exp, steps, data.trials[i].exp_obs, opts).total;
  });
  double total = 0.0;
  for (double v : per_trial) total += v;
  return total;
}

// Exact linear-Gaussian reference for models without signal-dependent noise.
// Written as explicit block recursions (predict the known-x conditional,
// condition on the next observation) rather than through the stacked
// moment-matching machinery, so the two paths are independent.
double exact_linear_loglik(const SystemModel& model, const GainSchedule& gains,
                           const dmat& states, const LoglikOptions& opts) {
  require(model.C_list.empty() && model.D_list.empty(),
          "exact_linear_loglik: model must have no signal-dependent noise");
  const std::size_t m = model.state_dim, T = model.horizon;
  require_data(states, T, m, "states");

  const dmat VVt = model.V * model.V.transpose();
  const dmat EEt = model.E * model.E.transpose();
  const dmat WWt = model.W * model.W.transpose();

  double total = 0.0;
  if (opts.include_initial_state_factor)
    total = gaussian_logpdf(states.row(0).transpose(), model.init_state_mean,
                            model.init_state_cov, opts.jitter, "initial state factor");

  dvec mu = model.init_estimate_mean;
  dmat Sig = model.init_estimate_cov;

  for (std::size_t t = 0; t + 1 < T; ++t) {
    const dmat& A = model.A.at(t);
    const dmat& B = model.B.at(t);
    const dmat& H = model.H.at(t);
    const dmat& K = gains.K.at(t);
    const dmat& L = gains.L.at(t);
    const dvec x = states.row(t).transpose();
    const dvec x1 = states.row(t + 1).transpose();

    const dmat BL = B * L;
    const dmat G = A - BL - K * H;

    // Conditional on xhat_t ~ N(mu, Sig) and the known x_t:
    const dvec mx = A * x - BL * mu;
    const dmat Sxx = symmetrized(BL * Sig * BL.transpose() + VVt);
    const dvec mh = G * mu + K * H * x;
    const dmat Shh = symmetrized(G * Sig * G.transpose() +
                                 K * WWt * K.transpose() + EEt);
    const dmat Sxh = -BL * Sig * G.transpose();

    SpdChol f = spd_factor(Sxx, opts.jitter, "state marginal");
    const dvec r = x1 - mx;
    total -= 0.5 * (r.dot(f.solve(r)) + f.log_det +
                    static_cast<double>(m) * kLogTwoPi);

    const dmat gain = f.solve(Sxh).transpose();  // m x m: Shx Sxx^{-1}
    mu = mh + gain * r;
    Sig = symmetrized(Shh - gain * Sxh);
  }
  return total;
}

double exact_linear_loglik(const SystemModel& model, const ExperimenterModel& exp,
                           const GainSchedule& gains, const dmat& exp_obs,
                           const LoglikOptions& opts) {
  require(model.C_list.empty() && model.D_list.empty(),
          "exact_linear_loglik: model must have no signal-dependent noise");
  const std::size_t m = model.state_dim, T = model.horizon, s = exp.obs_dim();
  require_data(exp_obs, T, s, "experimenter observations");

  const dmat VVt = model.V * model.V.transpose();
  const dmat EEt = model.E * model.E.transpose();
  const dmat WWt = model.W * model.W.transpose();
  const dmat NNt = exp.N * exp.N.transpose();

  // Joint filter over z = (x, xhat).
  GaussianBelief z = initial_joint(model);
  double total = 0.0;

  for (std::size_t t = 0; t < T; ++t) {
    // Observe o_t = M x_t + N nu.
    const dvec mo = exp.M * z.mean.head(m);
    const dmat Szo = z.cov.leftCols(m) * exp.M.transpose();
    const dmat Soo = symmetrized(exp.M * z.cov.topLeftCorner(m, m) * exp.M.transpose() + NNt);
    SpdChol f = spd_factor(Soo, opts.jitter, "observation marginal");
    const dvec r = exp_obs.row(t).transpose() - mo;
    total -= 0.5 * (r.dot(f.solve(r)) + f.log_det +
                    static_cast<double>(s) * kLogTwoPi);
    const dmat SzoT = Szo.transpose();
    const dmat gain = f.solve(SzoT).transpose();  // 2m x s
    z.mean += gain * r;
    z.cov = symmetrized(z.cov - gain * Szo.transpose());

    if (t + 1 >= T) break;

    const dmat& A = model.A.at(t);
    const dmat& B = model.B.at(t);
    const dmat& H = model.H.at(t);
    const dmat& K = gains.K.at(t);
    const dmat& L = gains.L.at(t);
    const dmat BL = B * L;
    const dmat KH = K * H;

    dmat F(2 * m, 2 * m);
    F.topLeftCorner(m, m) = A;
    F.topRightCorner(m, m) = -BL;
    F.bottomLeftCorner(m, m) = KH;
    F.bottomRightCorner(m, m) = A - BL - KH;

    dmat add = dmat::Zero(2 * m, 2 * m);
    add.topLeftCorner(m, m) = VVt;
    add.bottomRightCorner(m, m) = K * WWt * K.transpose() + EEt;

    z.mean = F * z.mean;
    z.cov = symmetrized(F * z.cov * F.transpose() + add);
  }
  return total;
}

double exact_linear_loglik_dataset(const SystemModel& model, const ExperimenterModel* exp,
                                   const GainSchedule& gains, const TrajectoryDataset& data,
                                   const LoglikOptions& opts) {
  require(!data.trials.empty(), "exact_linear_loglik_dataset: empty dataset");
  double total = 0.0;
  for (const Trajectory& traj : data.trials)
    total += exp != nullptr
                 ? exact_linear_loglik(model, *exp, gains, traj.exp_obs, opts)
                 : exact_linear_loglik(model, gains, traj.states, opts);
  return total;
}

std::vector<GaussianBelief> predict_state_distribution(const SystemModel& model,
                                                       const GainSchedule& gains) {
  const std::size_t m = model.state_dim, T = model.horizon;
  std::vector<GaussianBelief> out;
  out.reserve(T);

  GaussianBelief joint = initial_joint(model);
  out.push_back({joint.mean.head(m), joint.cov.topLeftCorner(m, m)});
  for (std::size_t t = 0; t + 1 < T; ++t) {
    joint = propagate_moment_matched(build_joint_dynamics(model, gains, t), joint);
    out.push_back({joint.mean.head(m), joint.cov.topLeftCorner(m, m)});
  }
  return out;
}

SystemModel with_matched_additive_noise(const SystemModel& model,
                                        const TrajectoryDataset& data) {
  require(!data.trials.empty(), "with_matched_additive_noise: empty dataset");
  const std::size_t m = model.state_dim, k = model.obs_dim;

  SystemModel out = model;
  out.C_list.clear();
  out.D_list.clear();

  if (!model.C_list.empty()) {
    dmat avg = dmat::Zero(m, m);
    std::size_t count = 0;
    for (const Trajectory& traj : data.trials)
      for (Eigen::Index t = 0; t < traj.controls.rows(); ++t) {
        const dvec u = traj.controls.row(t).transpose();
        for (const dmat& C : model.C_list) {
          const dvec cu = C * u;
          avg += cu * cu.transpose();
        }
        ++count;
      }
    if (count > 0) avg /= static_cast<double>(count);
    out.V = psd_sqrt(model.V * model.V.transpose() + avg);
  }
  if (!model.D_list.empty()) {
    dmat avg = dmat::Zero(k, k);
    std::size_t count = 0;
    for (const Trajectory& traj : data.trials)
      for (Eigen::Index t = 0; t < traj.states.rows(); ++t) {
        const dvec x = traj.states.row(t).transpose();
        for (const dmat& D : model.D_list) {
          const dvec dx = D * x;
          avg += dx * dx.transpose();
        }
        ++count;
      }
    if (count > 0) avg /= static_cast<double>(count);
    out.W = psd_sqrt(model.W * model.W.transpose() + avg);
  }
  return out;
}

}  // namespace sdnioc
