#pragma once

// Benchmark problem constructors. Plant constants are packaged in Params
// structs with physiologically sensible defaults; every constant can be
// overridden. Each constructor returns the model, cost, experimenter map,
// the parameter spec used for fitting, and the true parameter vector.

#include <cstdint>
#include <optional>

#include "sdnioc/estimate.hpp"
#include "sdnioc/model.hpp"
#include "sdnioc/rng.hpp"

namespace sdnioc {

struct Problem {
  std::string name;
  SystemModel model;
  CostModel cost;
  std::optional<ExperimenterModel> exp;
  ParamSpec spec;
  dvec theta_true;

  const ExperimenterModel* exp_ptr() const { return exp ? &*exp : nullptr; }
};

// Planar reaching with a second-order muscle filter. State: (position,
// velocity, force, excitation, target). Parameters recovered by fitting:
// r (control effort), v (terminal velocity weight), f (terminal force weight).
struct ReachingParams {
  double dt = 0.01;          // s
  double duration = 0.35;    // s; dt * steps = duration for integer steps
  double target = 0.1;       // m
  double tau_act = 0.04;     // s, activation stage
  double tau_exc = 0.04;     // s, excitation stage
  double sdn_scale = 0.5;    // control-dependent noise, fraction of B
  double obs_pos_sd = 0.01;  // m, agent position-observation noise
  double process_sd = 1e-4;  // additive plant noise on dynamic dims
  double internal_sd = 1e-4; // estimation noise on dynamic dims
  double init_sd = 1e-3;     // initial state/estimate spread on dynamic dims
  double exp_obs_sd = 1e-3;  // m, experimenter position-noise (partial obs)
  double r = 1e-5;
  double v = 0.2;
  double f = 0.02;
};
Problem make_reaching(const ReachingParams& params = {});

// Saccadic gaze shift with a second-order oculomotor plant. State: (angle,
// velocity, constant 1). Parameter recovered by fitting: r (control effort).
struct SaccadeParams {
  double dt = 1.25e-3;        // s
  double fixation = 0.05;     // s at the initial target before the jump
  double duration = 0.15;     // s total
  double tau1 = 0.224;        // s
  double tau2 = 0.013;        // s
  double from_deg = -10.0;
  double to_deg = 10.0;
  double accuracy_weight = 1.0;
  double sdn_scale = 0.2;     // control-dependent noise, fraction of B
  double obs_angle_sd = 0.1;  // deg
  double obs_vel_sd = 1.0;    // deg/s
  double process_sd = 1e-3;
  double internal_sd = 1e-4;
  double init_sd = 0.05;      // deg-scale initial spread
  double r = 1e-4;
};
Problem make_saccade(const SaccadeParams& params = {});

// Random fitting problems: dense N(0,1) A (normalized to unit Frobenius
// norm), B likewise, unnormalized H, LKJ(lkj_eta) Cholesky factors for V and
// W, one C and one D with Uniform(mult_noise_lo, mult_noise_hi) entries,
// terminal cost d d^T with d = (1, 0, ..., 0, -1), running control cost
// diag(r_1, r_2). r_vec pins the true control costs; when empty they are
// drawn log-uniform on [r_lo, r_hi]. The r draw is the last use of the
// stream, so pinning r_vec leaves the sampled plant unchanged.
struct RandomProblemParams {
  std::size_t state_dim = 5;
  std::size_t control_dim = 2;
  std::size_t horizon = 30;
  double mult_noise_lo = 0.0;  // bounds of the uniform C/D entries
  double mult_noise_hi = 0.5;
  double lkj_eta = 1.0;
  dvec r_vec;  // control_dim entries > 0, or empty to sample
  double r_lo = 0.05;
  double r_hi = 0.5;
  double init_sd = 0.1;
};
Problem make_random_problem(uint64_t seed, const RandomProblemParams& params = {});

// Lower Cholesky factor of an LKJ(eta) correlation matrix (onion method).
dmat lkj_cholesky(int dim, double eta, Rng& rng);

}  // namespace sdnioc
