#include "sdnioc/problems.hpp"

#include <cmath>

namespace sdnioc {
namespace {

long steps_for(double duration, double dt, const char* what) {
  const double raw = duration / dt;
  const long steps = std::lround(raw);
  if (steps < 1 || std::abs(raw - static_cast<double>(steps)) > 1e-9)
    throw ValidationError(std::string(what) + ": duration must be an integer number of steps");
  return steps;
}

ParamEntry log_param(std::string name, double lo_log10, double hi_log10,
                     std::vector<ParamBinding> bindings) {
  ParamEntry p;
  p.name = std::move(name);
  p.transform = ParamTransform::Log10;
  p.lo = lo_log10;
  p.hi = hi_log10;
  p.bindings = std::move(bindings);
  return p;
}

}  // namespace

// Point mass driven through a two-stage muscle filter. Dynamics (Euler, step
// dt): pos' = pos + dt vel, vel' = vel + dt force, force low-passes
// excitation, excitation low-passes the control. The target coordinate is
// constant. Terminal cost (pos - target)^2 + (v vel)^2 + (f force)^2, running
// cost r/(steps-1) u^2; fitted parameters are (r, v, f) with the terminal
// weights entering squared.
Problem make_reaching(const ReachingParams& prm) {
  const long steps = steps_for(prm.duration, prm.dt, "reaching");
  const std::size_t T = static_cast<std::size_t>(steps) + 1;
  const std::size_t m = 5, p = 1, k = 1;

  Problem prob;
  prob.name = "reaching";
  SystemModel& model = prob.model;
  model.state_dim = m;
  model.control_dim = p;
  model.obs_dim = k;
  model.horizon = T;

  dmat A = dmat::Identity(m, m);
  A(0, 1) = prm.dt;
  A(1, 2) = prm.dt;
  A(2, 2) = 1.0 - prm.dt / prm.tau_act;
  A(2, 3) = prm.dt / prm.tau_act;
  A(3, 3) = 1.0 - prm.dt / prm.tau_exc;
  model.A = MatSeq(A);

  dmat B = dmat::Zero(m, p);
  B(3, 0) = prm.dt / prm.tau_exc;
  model.B = MatSeq(B);

  dmat H = dmat::Zero(k, m);
  H(0, 0) = 1.0;
  model.H = MatSeq(H);

  // The target coordinate gets a tiny but nonzero noise floor so state
  // marginals stay positive definite without jitter.
  const double tiny = 1e-8;
  dvec vdiag(m);
  vdiag << prm.process_sd, prm.process_sd, prm.process_sd, prm.process_sd, tiny;
  model.V = vdiag.asDiagonal();
  model.W = dmat::Constant(1, 1, prm.obs_pos_sd);
  dvec ediag(m);
  ediag << prm.internal_sd, prm.internal_sd, prm.internal_sd, prm.internal_sd, 0.0;
  model.E = ediag.asDiagonal();

  model.C_list = {prm.sdn_scale * B};

  model.init_state_mean = dvec::Zero(m);
  model.init_state_mean(4) = prm.target;
  dvec isd(m);
  isd << prm.init_sd, prm.init_sd, prm.init_sd, prm.init_sd, tiny;
  model.init_state_cov = isd.array().square().matrix().asDiagonal();
  model.init_estimate_mean = model.init_state_mean;
  model.init_estimate_cov = model.init_state_cov;

  // Terminal cost: (pos - target)^2 + (v vel)^2 + (f force)^2.
  dmat Qterm = dmat::Zero(m, m);
  dvec d1 = dvec::Zero(m);
  d1(0) = 1.0;
  d1(4) = -1.0;
  Qterm += d1 * d1.transpose();
  Qterm(1, 1) = prm.v * prm.v;
  Qterm(2, 2) = prm.f * prm.f;
  std::vector<dmat> Qs(T, dmat::Zero(m, m));
  Qs[T - 1] = Qterm;
  prob.cost.Q = MatSeq(std::move(Qs));
  const double r_scale = 1.0 / static_cast<double>(steps - 1);
  prob.cost.R = MatSeq(dmat::Constant(1, 1, prm.r * r_scale));

  ExperimenterModel exp;
  exp.M = H;
  exp.N = dmat::Constant(1, 1, prm.exp_obs_sd);
  prob.exp = std::move(exp);

  ParamBinding br{TargetMatrix::R, 0, -1, 0, 0, r_scale, 1};
  ParamBinding bv{TargetMatrix::Q, 0, static_cast<int>(T) - 1, 1, 1, 1.0, 2};
  ParamBinding bf{TargetMatrix::Q, 0, static_cast<int>(T) - 1, 2, 2, 1.0, 2};
  prob.spec.params = {log_param("r", std::log10(prm.r) - 3, std::log10(prm.r) + 3, {br}),
                      log_param("v", std::log10(prm.v) - 3, std::log10(prm.v) + 3, {bv}),
                      log_param("f", std::log10(prm.f) - 3, std::log10(prm.f) + 3, {bf})};
  prob.theta_true = dvec(3);
  prob.theta_true << prm.r, prm.v, prm.f;

  validate_or_throw(model, prob.cost, prob.exp_ptr());
  return prob;
}

// Second-order oculomotor plant tracking a stepped gaze target. State:
// (angle, angular velocity, constant one). Per-step cost
// accuracy_weight * (angle - g_t)^2 + r u^2 with g_t jumping from from_deg to
// to_deg after the fixation prefix.
Problem make_saccade(const SaccadeParams& prm) {
  const long steps = steps_for(prm.duration, prm.dt, "saccade");
  const long fix_steps = steps_for(prm.fixation, prm.dt, "saccade fixation");
  if (fix_steps >= steps)
    throw ValidationError("saccade: fixation must be shorter than duration");
  const std::size_t T = static_cast<std::size_t>(steps) + 1;
  const std::size_t m = 3, p = 1, k = 2;

  Problem prob;
  prob.name = "saccade";
  SystemModel& model = prob.model;
  model.state_dim = m;
  model.control_dim = p;
  model.obs_dim = k;
  model.horizon = T;

  const double tt = prm.tau1 * prm.tau2;
  dmat A = dmat::Identity(m, m);
  A(0, 1) = prm.dt;
  A(1, 0) = -prm.dt / tt;
  A(1, 1) = 1.0 - prm.dt * (prm.tau1 + prm.tau2) / tt;
  model.A = MatSeq(A);

  dmat B = dmat::Zero(m, p);
  B(1, 0) = prm.dt / tt;
  model.B = MatSeq(B);

  dmat H = dmat::Zero(k, m);
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  model.H = MatSeq(H);

  const double tiny = 1e-9;
  dvec vdiag(m);
  vdiag << prm.process_sd, prm.process_sd * 10.0, tiny;
  model.V = vdiag.asDiagonal();
  dvec wdiag(k);
  wdiag << prm.obs_angle_sd, prm.obs_vel_sd;
  model.W = wdiag.asDiagonal();
  dvec ediag(m);
  ediag << prm.internal_sd, prm.internal_sd * 10.0, 0.0;
  model.E = ediag.asDiagonal();

  model.C_list = {prm.sdn_scale * B};

  model.init_state_mean = dvec::Zero(m);
  model.init_state_mean(0) = prm.from_deg;
  model.init_state_mean(2) = 1.0;
  dvec isd(m);
  isd << prm.init_sd, prm.init_sd * 10.0, tiny;
  model.init_state_cov = isd.array().square().matrix().asDiagonal();
  model.init_estimate_mean = model.init_state_mean;
  model.init_estimate_cov = model.init_state_cov;

  std::vector<dmat> Qs(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double g = static_cast<long>(t) < fix_steps ? prm.from_deg : prm.to_deg;
    dvec d(m);
    d << 1.0, 0.0, -g;
    Qs[t] = prm.accuracy_weight * (d * d.transpose());
  }
  prob.cost.Q = MatSeq(std::move(Qs));
  prob.cost.R = MatSeq(dmat::Constant(1, 1, prm.r));

  ExperimenterModel exp;
  exp.M = dmat::Zero(1, m);
  exp.M(0, 0) = 1.0;
  exp.N = dmat::Constant(1, 1, prm.obs_angle_sd);
  prob.exp = std::move(exp);

  ParamBinding br{TargetMatrix::R, 0, -1, 0, 0, 1.0, 1};
  prob.spec.params = {log_param("r", std::log10(prm.r) - 3, std::log10(prm.r) + 3, {br})};
  prob.theta_true = dvec::Constant(1, prm.r);

  validate_or_throw(model, prob.cost, prob.exp_ptr());
  return prob;
}

// Onion-method sample of the Cholesky factor of an LKJ(eta) correlation
// matrix. Row i (0-based, i >= 1) is sqrt(y) u with u uniform on the sphere
// in R^i and y ~ Beta(i/2, eta + (dim-1-i)/2).
dmat lkj_cholesky(int dim, double eta, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("lkj_cholesky: dim must be positive");
  dmat L = dmat::Zero(dim, dim);
  L(0, 0) = 1.0;
  for (int i = 1; i < dim; ++i) {
    const double beta_b = eta + 0.5 * static_cast<double>(dim - 1 - i);
    const double y = rng.beta(0.5 * static_cast<double>(i), beta_b);
    dvec u(i);
    double norm = 0.0;
    do {
      for (int j = 0; j < i; ++j) u(j) = rng.normal();
      norm = u.norm();
    } while (norm == 0.0);
    u /= norm;
    L.row(i).head(i) = std::sqrt(y) * u.transpose();
    L(i, i) = std::sqrt(1.0 - y);
  }
  return L;
}

// Draw order: A, B, H entries (column-major), V, W via lkj_cholesky, C, D
// entries, then r_1, r_2.
Problem make_random_problem(uint64_t seed, const RandomProblemParams& prm) {
  const std::size_t m = prm.state_dim, p = prm.control_dim, k = prm.state_dim,
                    T = prm.horizon;
  if (m < 2) throw std::invalid_argument("random problem: state_dim must be >= 2");
  Rng rng(Rng::derive_seed(seed, 0x9e1));

  Problem prob;
  prob.name = "random";
  SystemModel& model = prob.model;
  model.state_dim = m;
  model.control_dim = p;
  model.obs_dim = k;
  model.horizon = T;

  auto randn_mat = [&](std::size_t rows, std::size_t cols) {
    dmat out(rows, cols);
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = rng.normal();
    return out;
  };

  // The last state component is the target the first component is driven to.
  // It must persist across the horizon to make the terminal cost meaningful,
  // so the sampled dynamics live in the leading (m-1)-block and the target
  // row stays an exact identity with no process or control noise feeding it.
  const std::size_t mb = m - 1;
  dmat Ab = randn_mat(mb, mb);
  Ab /= Ab.norm();
  dmat A = dmat::Zero(m, m);
  A.topLeftCorner(mb, mb) = Ab;
  A(m - 1, m - 1) = 1.0;
  model.A = MatSeq(A);
  dmat Bb = randn_mat(mb, p);
  Bb /= Bb.norm();
  dmat B = dmat::Zero(m, p);
  B.topRows(mb) = Bb;
  model.B = MatSeq(B);
  model.H = MatSeq(randn_mat(k, m));

  dmat V = dmat::Zero(m, m);
  V.topLeftCorner(mb, mb) = lkj_cholesky(static_cast<int>(mb), prm.lkj_eta, rng);
  model.V = V;
  model.W = lkj_cholesky(static_cast<int>(k), prm.lkj_eta, rng);
  model.E = dmat::Zero(m, m);

  auto uniform_mat = [&](std::size_t rows, std::size_t cols) {
    dmat out(rows, cols);
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        out(r, c) = rng.uniform(prm.mult_noise_lo, prm.mult_noise_hi);
    return out;
  };
  dmat C = dmat::Zero(m, p);
  C.topRows(mb) = uniform_mat(mb, p);
  model.C_list = {C};
  model.D_list = {uniform_mat(k, m)};

  model.init_state_mean = dvec::Zero(m);
  model.init_state_mean(m - 1) = 1.0;
  model.init_state_cov =
      prm.init_sd * prm.init_sd * dmat::Identity(m, m);
  model.init_estimate_mean = model.init_state_mean;
  model.init_estimate_cov = dmat::Zero(m, m);

  dvec d = dvec::Zero(m);
  d(0) = 1.0;
  d(m - 1) = -1.0;
  std::vector<dmat> Qs(T, dmat::Zero(m, m));
  Qs[T - 1] = d * d.transpose();
  prob.cost.Q = MatSeq(std::move(Qs));

  dvec r_true(p);
  if (prm.r_vec.size() > 0) {
    if (prm.r_vec.size() != static_cast<Eigen::Index>(p))
      throw std::invalid_argument("random problem: r_vec size must equal control_dim");
    if (prm.r_vec.minCoeff() <= 0.0)
      throw std::invalid_argument("random problem: r_vec entries must be positive");
    r_true = prm.r_vec;
  } else {
    for (std::size_t i = 0; i < p; ++i)
      r_true(i) = std::exp(rng.uniform(std::log(prm.r_lo), std::log(prm.r_hi)));
  }
  dmat R = dmat::Zero(p, p);
  R.diagonal() = r_true;
  prob.cost.R = MatSeq(R);

  const double center = 0.5 * (std::log10(prm.r_lo) + std::log10(prm.r_hi));
  for (std::size_t i = 0; i < p; ++i) {
    ParamBinding b{TargetMatrix::R, 0, -1, static_cast<int>(i), static_cast<int>(i),
                   1.0, 1};
    prob.spec.params.push_back(
        log_param("r" + std::to_string(i + 1), center - 3, center + 3, {b}));
  }
  prob.theta_true = r_true;

  validate_or_throw(model, prob.cost, nullptr);
  return prob;
}

}  // namespace sdnioc
