#include <cmath>

#include "doctest.h"
#include "sdnioc/likelihood.hpp"
#include "sdnioc/model.hpp"
#include "sdnioc/simulate.hpp"
#include "sdnioc/solver.hpp"
#include "support/oracles.hpp"

using namespace sdnioc;

namespace {

// Fixed small plant with both noise channels for moment-matching checks.
struct Fixture {
  SystemModel model;
  GainSchedule gains;
};

Fixture sdn_fixture() {
  Fixture f;
  SystemModel& model = f.model;
  model.state_dim = 2;
  model.control_dim = 1;
  model.obs_dim = 1;
  model.horizon = 2;
  dmat A(2, 2);
  A << 1.0, 0.3, 0.0, 0.9;
  dmat B(2, 1);
  B << 0.0, 0.5;
  dmat H(1, 2);
  H << 1.0, 0.0;
  model.A = MatSeq(A);
  model.B = MatSeq(B);
  model.H = MatSeq(H);
  model.V = 0.05 * dmat::Identity(2, 2);
  model.W = 0.1 * dmat::Ones(1, 1);
  model.E = 0.02 * dmat::Identity(2, 2);
  dmat C(2, 1);
  C << 0.0, 0.4;
  model.C_list.push_back(C);
  dmat D(1, 2);
  D << 0.3, 0.0;
  model.D_list.push_back(D);
  model.init_state_mean = dvec::Zero(2);
  model.init_state_cov = 0.1 * dmat::Identity(2, 2);
  model.init_estimate_mean = dvec::Zero(2);
  model.init_estimate_cov = 0.05 * dmat::Identity(2, 2);

  dmat L(1, 2);
  L << 0.4, 0.2;
  dmat K(2, 1);
  K << 0.5, 0.3;
  f.gains.L = {L, dmat::Zero(1, 2)};
  f.gains.K = {K, dmat::Zero(2, 1)};
  return f;
}

GaussianBelief fixture_belief() {
  GaussianBelief b;
  b.mean.resize(4);
  b.mean << 0.3, -0.2, 0.1, 0.4;
  b.cov = 0.2 * dmat::Identity(4, 4) + 0.05 * dmat::Ones(4, 4);
  return b;
}

}  // namespace

TEST_CASE("conditioning matches the bivariate hand computation") {
  GaussianBelief joint;
  joint.mean = dvec::Zero(2);
  joint.cov.resize(2, 2);
  joint.cov << 2.0, 1.0, 1.0, 2.0;
  const dvec obs = dvec::Constant(1, 1.0);
  const double expect_factor = -0.5 * (0.5 + std::log(2.0) + kLogTwoPi);

  SUBCASE("observe the leading block") {
    ConditionResult cr = condition_gaussian(joint, obs);
    CHECK(cr.log_factor == doctest::Approx(expect_factor).epsilon(1e-12));
    CHECK(cr.posterior.mean(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cr.posterior.cov(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("observe the trailing block") {
    ConditionResult cr = condition_gaussian_tail(joint, obs);
    CHECK(cr.log_factor == doctest::Approx(expect_factor).epsilon(1e-12));
    CHECK(cr.posterior.mean(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cr.posterior.cov(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("observing everything leaves an empty posterior") {
    ConditionResult cr = condition_gaussian(joint, dvec::Zero(2));
    CHECK(cr.posterior.dim() == 0);
  }
}

TEST_CASE("moment-matched propagation reproduces Monte Carlo moments") {
  Fixture f = sdn_fixture();
  const JointDynamics jd = build_joint_dynamics(f.model, f.gains, 0);
  const GaussianBelief belief = fixture_belief();
  const GaussianBelief predicted = propagate_moment_matched(jd, belief);
  REQUIRE(predicted.dim() == 4);

  const dmat sqrt_cov = psd_sqrt(belief.cov);
  const dmat& A = f.model.A.at(0);
  const dmat& B = f.model.B.at(0);
  const dmat& H = f.model.H.at(0);
  const dmat& L = f.gains.L[0];
  const dmat& K = f.gains.K[0];

  Rng rng(4242);
  const int n = 400000;
  dvec mean_acc = dvec::Zero(4);
  dmat raw_acc = dmat::Zero(4, 4);
  for (int i = 0; i < n; ++i) {
    const dvec z = belief.mean + sqrt_cov * rng.normal_vec(4);
    const dvec x = z.head(2);
    const dvec xh = z.tail(2);
    const dvec u = -(L * xh);
    dvec x_next = A * x + B * u + f.model.V * rng.normal_vec(2);
    x_next += rng.normal() * (f.model.C_list[0] * u);
    dvec y = H * x + f.model.W * rng.normal_vec(1);
    y += rng.normal() * (f.model.D_list[0] * x);
    const dvec xh_next =
        A * xh + B * u + K * (y - H * xh) + f.model.E * rng.normal_vec(2);
    dvec znext(4);
    znext << x_next, xh_next;
    mean_acc += znext;
    raw_acc += znext * znext.transpose();
  }
  const dvec emp_mean = mean_acc / n;
  const dmat emp_cov = raw_acc / n - emp_mean * emp_mean.transpose();

  CHECK((emp_mean - predicted.mean).cwiseAbs().maxCoeff() < 0.01);
  CHECK((emp_cov - predicted.cov).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("known-state overload agrees with a point-mass state block") {
  Fixture f = sdn_fixture();
  const JointDynamics jd = build_joint_dynamics(f.model, f.gains, 0);

  dvec x_obs(2);
  x_obs << 0.7, -0.1;
  GaussianBelief est;
  est.mean = dvec::Constant(2, 0.2);
  est.cov = 0.3 * dmat::Identity(2, 2);

  GaussianBelief joint;
  joint.mean.resize(4);
  joint.mean << x_obs, est.mean;
  joint.cov = dmat::Zero(4, 4);
  joint.cov.bottomRightCorner(2, 2) = est.cov;

  const GaussianBelief a = propagate_moment_matched(jd, est, x_obs);
  const GaussianBelief b = propagate_moment_matched(jd, joint);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stacked experimenter block is consistent with the state block") {
  Fixture f = sdn_fixture();
  ExperimenterModel exp;
  exp.M = dmat(1, 2);
  exp.M << 1.0, 0.5;
  exp.N = 0.05 * dmat::Identity(1, 1);

  const JointDynamics full = build_joint_dynamics(f.model, f.gains, 0);
  const JointDynamics part = build_joint_dynamics(f.model, exp, f.gains, 0);
  const GaussianBelief belief = fixture_belief();

  const GaussianBelief a = propagate_moment_matched(full, belief);
  const GaussianBelief b = propagate_moment_matched(part, belief);
  REQUIRE(b.dim() == 5);

  CHECK((b.mean.head(4) - a.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.cov.topLeftCorner(4, 4) - a.cov).cwiseAbs().maxCoeff() < 1e-12);
  // o = M x' + N nu: mean, variance, and cross-covariance follow directly.
  CHECK(b.mean(4) == doctest::Approx((exp.M * a.mean.head(2))(0)).epsilon(1e-12));
  const double var_o =
      (exp.M * a.cov.topLeftCorner(2, 2) * exp.M.transpose())(0, 0) + 0.05 * 0.05;
  CHECK(b.cov(4, 4) == doctest::Approx(var_o).epsilon(1e-12));
  const dmat cross = a.cov.leftCols(2) * exp.M.transpose();
  CHECK((b.cov.topRightCorner(4, 1) - cross).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("approximate likelihood is exact without signal-dependent noise") {
  Rng rng(61);
  auto [model, cost] = testing::random_lqg(rng, 3, 2, 2, 10, true);
  GainSchedule gains = solve_gains(model, cost).gains;
  ExperimenterModel exp;
  exp.M = dmat(2, 3);
  exp.M << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  exp.N = 0.05 * dmat::Identity(2, 2);

  TrajectoryDataset data = rollout_batch(model, gains, 5, 9001, &exp, 1);

  double sum_full_approx = 0.0, sum_full_exact = 0.0;
  for (const Trajectory& traj : data.trials) {
    const double approx = log_likelihood_trajectory(model, gains, traj.states).total;
    const double exact = exact_linear_loglik(model, gains, traj.states);
    CHECK(std::abs(approx - exact) <= 1e-8);
    sum_full_approx += approx;
    sum_full_exact += exact;

    const double papprox =
        log_likelihood_trajectory(model, exp, gains, traj.exp_obs).total;
    const double pexact = exact_linear_loglik(model, exp, gains, traj.exp_obs);
    CHECK(std::abs(papprox - pexact) <= 1e-8);
  }
  CHECK(log_likelihood_dataset(model, gains, data) ==
        doctest::Approx(sum_full_approx).epsilon(1e-12));
  CHECK(exact_linear_loglik_dataset(model, nullptr, gains, data) ==
        doctest::Approx(sum_full_exact).epsilon(1e-12));
}

TEST_CASE("exact reference refuses signal-dependent models") {
  Fixture f = sdn_fixture();
  const dmat states = dmat::Zero(2, 2);
  CHECK_THROWS_AS(exact_linear_loglik(f.model, f.gains, states), ValidationError);
}

TEST_CASE("initial state factor toggles by exactly its log-density") {
  Rng rng(71);
  auto [model, cost] = testing::random_lqg(rng, 3, 2, 2, 8, false);
  GainSchedule gains = solve_gains(model, cost).gains;
  Trajectory traj = rollout(model, gains, 5150, nullptr);

  LoglikOptions on, off;
  off.include_initial_state_factor = false;
  const TrajectoryLoglik a = log_likelihood_trajectory(model, gains, traj.states, on);
  const TrajectoryLoglik b = log_likelihood_trajectory(model, gains, traj.states, off);
  const double first = gaussian_logpdf(traj.states.row(0).transpose(),
                                       model.init_state_mean, model.init_state_cov);
  CHECK(a.total - b.total == doctest::Approx(first).epsilon(1e-12));
  CHECK(b.factors[0] == 0.0);
}

TEST_CASE("factor and belief counts equal the horizon") {
  Rng rng(81);
  auto [model, cost] = testing::random_lqg(rng, 2, 1, 1, 7, false);
  model.C_list.push_back(0.3 * model.B.at(0));
  GainSchedule gains = solve_gains(model, cost).gains;
  ExperimenterModel exp;
  exp.M = dmat::Identity(2, 2);
  exp.N = 0.1 * dmat::Identity(2, 2);
  Trajectory traj = rollout(model, gains, 11, &exp);

  const TrajectoryLoglik full = log_likelihood_trajectory(model, gains, traj.states);
  CHECK(full.factors.size() == model.horizon);
  CHECK(full.beliefs.size() == model.horizon);
  CHECK(full.beliefs[0].dim() == 2);

  const TrajectoryLoglik part =
      log_likelihood_trajectory(model, exp, gains, traj.exp_obs);
  CHECK(part.factors.size() == model.horizon);
  CHECK(part.beliefs.size() == model.horizon);
  CHECK(part.beliefs[0].dim() == 4);
  CHECK(std::isfinite(part.total));
}

TEST_CASE("horizon 1 reduces to the initial factors only") {
  Rng rng(91);
  auto [model, cost] = testing::random_lqg(rng, 2, 1, 1, 1, false);
  GainSchedule gains = solve_gains(model, cost).gains;
  ExperimenterModel exp;
  exp.M = dmat::Identity(2, 2);
  exp.N = 0.1 * dmat::Identity(2, 2);
  Trajectory traj = rollout(model, gains, 21, &exp);

  const TrajectoryLoglik full = log_likelihood_trajectory(model, gains, traj.states);
  const double first = gaussian_logpdf(traj.states.row(0).transpose(),
                                       model.init_state_mean, model.init_state_cov);
  CHECK(full.total == doctest::Approx(first).epsilon(1e-12));

  const TrajectoryLoglik part =
      log_likelihood_trajectory(model, exp, gains, traj.exp_obs);
  CHECK(part.factors.size() == 1);
  CHECK(std::isfinite(part.total));
}

TEST_CASE("dataset likelihood is invariant to thread count") {
  Rng rng(101);
  auto [model, cost] = testing::random_lqg(rng, 3, 2, 2, 9, true);
  model.C_list.push_back(0.4 * model.B.at(0));
  GainSchedule gains = solve_gains(model, cost).gains;
  TrajectoryDataset data = rollout_batch(model, gains, 16, 33, nullptr, 1);
  const double a = log_likelihood_dataset(model, gains, data, {}, 1);
  const double b = log_likelihood_dataset(model, gains, data, {}, 4);
  CHECK(a == b);
}

TEST_CASE("likelihood prefers the generating model") {
  Rng rng(111);
  auto [model, cost] = testing::random_lqg(rng, 3, 2, 2, 10, true);
  model.C_list.push_back(0.5 * model.B.at(0));
  GainSchedule gains = solve_gains(model, cost).gains;
  TrajectoryDataset data = rollout_batch(model, gains, 100, 77, nullptr, 1);

  SystemModel wrong = model;
  wrong.V *= 3.0;
  const double good = log_likelihood_dataset(model, gains, data);
  const double bad = log_likelihood_dataset(wrong, gains, data);
  CHECK(good > bad);
}

TEST_CASE("predicted state marginals match simulated moments") {
  Fixture f = sdn_fixture();
  f.model.horizon = 6;
  const dmat L0 = f.gains.L[0];
  const dmat K0 = f.gains.K[0];
  f.gains.L.assign(6, L0);
  f.gains.K.assign(6, K0);
  f.gains.L[5].setZero();
  f.gains.K[5].setZero();

  const std::vector<GaussianBelief> pred = predict_state_distribution(f.model, f.gains);
  REQUIRE(pred.size() == 6);

  const std::size_t n = 60000;
  TrajectoryDataset data = rollout_batch(f.model, f.gains, n, 123456, nullptr, 1);
  for (std::size_t t = 0; t < 6; ++t) {
    dvec mean_acc = dvec::Zero(2);
    dmat raw_acc = dmat::Zero(2, 2);
    for (const Trajectory& traj : data.trials) {
      const dvec x = traj.states.row(t).transpose();
      mean_acc += x;
      raw_acc += x * x.transpose();
    }
    const dvec emp_mean = mean_acc / static_cast<double>(n);
    const dmat emp_cov =
        raw_acc / static_cast<double>(n) - emp_mean * emp_mean.transpose();
    CHECK((emp_mean - pred[t].mean).cwiseAbs().maxCoeff() < 0.01);
    CHECK((emp_cov - pred[t].cov).cwiseAbs().maxCoeff() < 0.01);
  }
}

TEST_CASE("matched additive baseline absorbs the average control noise") {
  Fixture f = sdn_fixture();
  f.model.horizon = 5;
  const dmat L0 = f.gains.L[0];
  const dmat K0 = f.gains.K[0];
  f.gains.L.assign(5, L0);
  f.gains.K.assign(5, K0);
  f.gains.L[4].setZero();
  f.gains.K[4].setZero();

  TrajectoryDataset data = rollout_batch(f.model, f.gains, 50, 31337, nullptr, 1);
  SystemModel plain = with_matched_additive_noise(f.model, data);
  CHECK(plain.C_list.empty());
  CHECK(plain.D_list.empty());

  dmat avg = dmat::Zero(2, 2);
  std::size_t count = 0;
  for (const Trajectory& traj : data.trials)
    for (Eigen::Index t = 0; t < traj.controls.rows(); ++t) {
      const dvec cu = f.model.C_list[0] * traj.controls.row(t).transpose();
      avg += cu * cu.transpose();
      ++count;
    }
  avg /= static_cast<double>(count);
  const dmat expect = f.model.V * f.model.V.transpose() + avg;
  CHECK((plain.V * plain.V.transpose() - expect).cwiseAbs().maxCoeff() < 1e-10);
}
