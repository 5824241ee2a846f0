// Python bindings. Mirrors the C++ API one to one; heavy calls release the
// GIL since they never touch Python state.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdnioc/estimate.hpp"
#include "sdnioc/likelihood.hpp"
#include "sdnioc/metrics.hpp"
#include "sdnioc/model_io.hpp"
#include "sdnioc/problems.hpp"
#include "sdnioc/rng.hpp"
#include "sdnioc/simulate.hpp"
#include "sdnioc/solver.hpp"
#include "sdnioc/trajectory_io.hpp"

namespace py = pybind11;
using namespace sdnioc;

PYBIND11_MODULE(_sdnioc, mod) {
  mod.doc() = "Inverse optimal control for LQG systems with signal-dependent noise";
#ifdef SDNIOC_VERSION
  mod.attr("__version__") = SDNIOC_VERSION;
#else
  mod.attr("__version__") = "0.0.0";
#endif

  py::register_exception<IoError>(mod, "IoError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(mod, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_RuntimeError);

  // ---- model ----
  py::class_<MatSeq>(mod, "MatSeq")
      .def(py::init<>())
      .def(py::init<dmat>(), py::arg("constant"))
      .def(py::init<std::vector<dmat>>(), py::arg("varying"))
      .def_readwrite("slots", &MatSeq::slots)
      .def("constant", &MatSeq::constant)
      .def("at", [](const MatSeq& s, std::size_t t) { return s.at(t); }, py::arg("t"))
      .def("__len__", [](const MatSeq& s) { return s.slots.size(); });

  py::class_<SystemModel>(mod, "SystemModel")
      .def(py::init<>())
      .def_readwrite("state_dim", &SystemModel::state_dim)
      .def_readwrite("control_dim", &SystemModel::control_dim)
      .def_readwrite("obs_dim", &SystemModel::obs_dim)
      .def_readwrite("horizon", &SystemModel::horizon)
      .def_readwrite("A", &SystemModel::A)
      .def_readwrite("B", &SystemModel::B)
      .def_readwrite("H", &SystemModel::H)
      .def_readwrite("V", &SystemModel::V)
      .def_readwrite("W", &SystemModel::W)
      .def_readwrite("E", &SystemModel::E)
      .def_readwrite("C_list", &SystemModel::C_list)
      .def_readwrite("D_list", &SystemModel::D_list)
      .def_readwrite("init_state_mean", &SystemModel::init_state_mean)
      .def_readwrite("init_state_cov", &SystemModel::init_state_cov)
      .def_readwrite("init_estimate_mean", &SystemModel::init_estimate_mean)
      .def_readwrite("init_estimate_cov", &SystemModel::init_estimate_cov);

  py::class_<CostModel>(mod, "CostModel")
      .def(py::init<>())
      .def_readwrite("Q", &CostModel::Q)
      .def_readwrite("R", &CostModel::R);

  py::class_<ExperimenterModel>(mod, "ExperimenterModel")
      .def(py::init<>())
      .def_readwrite("M", &ExperimenterModel::M)
      .def_readwrite("N", &ExperimenterModel::N)
      .def("obs_dim", &ExperimenterModel::obs_dim);

  py::class_<GainSchedule>(mod, "GainSchedule")
      .def(py::init<>())
      .def_readwrite("L", &GainSchedule::L)
      .def_readwrite("K", &GainSchedule::K);

  mod.def("validate_or_throw",
          [](const SystemModel& model, const CostModel& cost, const ExperimenterModel* exp) {
            validate_or_throw(model, cost, exp);
          },
          py::arg("model"), py::arg("cost"), py::arg("exp") = nullptr);
  mod.def("model_fingerprint",
          [](const SystemModel& model, const CostModel& cost, const ExperimenterModel* exp) {
            return model_fingerprint(model, cost, exp);
          },
          py::arg("model"), py::arg("cost"), py::arg("exp") = nullptr);

  // ---- solver ----
  py::class_<SolveOptions>(mod, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("tol", &SolveOptions::tol)
      .def_readwrite("max_iters", &SolveOptions::max_iters);

  py::class_<SolveResult>(mod, "SolveResult")
      .def_readonly("gains", &SolveResult::gains)
      .def_readonly("expected_cost", &SolveResult::expected_cost)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged)
      .def_readonly("cost_trace", &SolveResult::cost_trace);

  mod.def("solve_gains", &solve_gains, py::arg("model"), py::arg("cost"),
          py::arg("options") = SolveOptions{}, py::call_guard<py::gil_scoped_release>());

  // ---- simulation ----
  py::class_<Trajectory>(mod, "Trajectory")
      .def(py::init<>())
      .def_readwrite("states", &Trajectory::states)
      .def_readwrite("estimates", &Trajectory::estimates)
      .def_readwrite("controls", &Trajectory::controls)
      .def_readwrite("agent_obs", &Trajectory::agent_obs)
      .def_readwrite("exp_obs", &Trajectory::exp_obs)
      .def_readwrite("seed", &Trajectory::seed);

  py::class_<TrajectoryDataset>(mod, "TrajectoryDataset")
      .def(py::init<>())
      .def_readwrite("trials", &TrajectoryDataset::trials)
      .def_readwrite("seed", &TrajectoryDataset::seed)
      .def_readwrite("fingerprint", &TrajectoryDataset::fingerprint)
      .def("__len__", &TrajectoryDataset::size);

  mod.def("rollout",
          [](const SystemModel& model, const GainSchedule& gains, uint64_t seed,
             const ExperimenterModel* exp) { return rollout(model, gains, seed, exp); },
          py::arg("model"), py::arg("gains"), py::arg("seed"), py::arg("exp") = nullptr,
          py::call_guard<py::gil_scoped_release>());
  mod.def("rollout_batch",
          [](const SystemModel& model, const GainSchedule& gains, std::size_t n_trials,
             uint64_t seed, const ExperimenterModel* exp, int n_threads) {
            return rollout_batch(model, gains, n_trials, seed, exp, n_threads);
          },
          py::arg("model"), py::arg("gains"), py::arg("n_trials"), py::arg("seed"),
          py::arg("exp") = nullptr, py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());

  mod.def("derive_seed", &Rng::derive_seed, py::arg("seed"), py::arg("index"));

  // ---- likelihood ----
  py::class_<LoglikOptions>(mod, "LoglikOptions")
      .def(py::init<>())
      .def_readwrite("include_initial_state_factor", &LoglikOptions::include_initial_state_factor)
      .def_readwrite("jitter", &LoglikOptions::jitter);

  py::class_<GaussianBelief>(mod, "GaussianBelief")
      .def(py::init<>())
      .def_readwrite("mean", &GaussianBelief::mean)
      .def_readwrite("cov", &GaussianBelief::cov)
      .def("dim", &GaussianBelief::dim);

  py::class_<TrajectoryLoglik>(mod, "TrajectoryLoglik")
      .def_readonly("total", &TrajectoryLoglik::total)
      .def_readonly("factors", &TrajectoryLoglik::factors)
      .def_readonly("beliefs", &TrajectoryLoglik::beliefs);

  mod.def("log_likelihood_trajectory",
          py::overload_cast<const SystemModel&, const GainSchedule&, const dmat&,
                            const LoglikOptions&>(&log_likelihood_trajectory),
          py::arg("model"), py::arg("gains"), py::arg("states"),
          py::arg("options") = LoglikOptions{}, py::call_guard<py::gil_scoped_release>());
  mod.def("log_likelihood_trajectory",
          py::overload_cast<const SystemModel&, const ExperimenterModel&, const GainSchedule&,
                            const dmat&, const LoglikOptions&>(&log_likelihood_trajectory),
          py::arg("model"), py::arg("exp"), py::arg("gains"), py::arg("exp_obs"),
          py::arg("options") = LoglikOptions{}, py::call_guard<py::gil_scoped_release>());
  mod.def("log_likelihood_dataset",
          py::overload_cast<const SystemModel&, const GainSchedule&, const TrajectoryDataset&,
                            const LoglikOptions&, int>(&log_likelihood_dataset),
          py::arg("model"), py::arg("gains"), py::arg("data"),
          py::arg("options") = LoglikOptions{}, py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());
  mod.def("log_likelihood_dataset",
          py::overload_cast<const SystemModel&, const ExperimenterModel&, const GainSchedule&,
                            const TrajectoryDataset&, const LoglikOptions&, int>(
              &log_likelihood_dataset),
          py::arg("model"), py::arg("exp"), py::arg("gains"), py::arg("data"),
          py::arg("options") = LoglikOptions{}, py::arg("n_threads") = 0,
          py::call_guard<py::gil_scoped_release>());
  mod.def("exact_linear_loglik_dataset",
          [](const SystemModel& model, const ExperimenterModel* exp, const GainSchedule& gains,
             const TrajectoryDataset& data, const LoglikOptions& options) {
            return exact_linear_loglik_dataset(model, exp, gains, data, options);
          },
          py::arg("model"), py::arg("exp"), py::arg("gains"), py::arg("data"),
          py::arg("options") = LoglikOptions{}, py::call_guard<py::gil_scoped_release>());
  mod.def("predict_state_distribution", &predict_state_distribution, py::arg("model"),
          py::arg("gains"), py::call_guard<py::gil_scoped_release>());
  mod.def("with_matched_additive_noise", &with_matched_additive_noise, py::arg("model"),
          py::arg("data"));

  // ---- estimation ----
  py::enum_<TargetMatrix>(mod, "TargetMatrix")
      .value("Q", TargetMatrix::Q)
      .value("R", TargetMatrix::R)
      .value("A", TargetMatrix::A)
      .value("B", TargetMatrix::B)
      .value("H", TargetMatrix::H)
      .value("V", TargetMatrix::V)
      .value("W", TargetMatrix::W)
      .value("E", TargetMatrix::E)
      .value("C", TargetMatrix::C)
      .value("D", TargetMatrix::D);

  py::enum_<ParamTransform>(mod, "ParamTransform")
      .value("Log10", ParamTransform::Log10)
      .value("Identity", ParamTransform::Identity);

  py::class_<ParamBinding>(mod, "ParamBinding")
      .def(py::init<>())
      .def_readwrite("target", &ParamBinding::target)
      .def_readwrite("list_index", &ParamBinding::list_index)
      .def_readwrite("time_index", &ParamBinding::time_index)
      .def_readwrite("row", &ParamBinding::row)
      .def_readwrite("col", &ParamBinding::col)
      .def_readwrite("scale", &ParamBinding::scale)
      .def_readwrite("power", &ParamBinding::power);

  py::class_<ParamEntry>(mod, "ParamEntry")
      .def(py::init<>())
      .def_readwrite("name", &ParamEntry::name)
      .def_readwrite("transform", &ParamEntry::transform)
      .def_readwrite("lo", &ParamEntry::lo)
      .def_readwrite("hi", &ParamEntry::hi)
      .def_readwrite("bindings", &ParamEntry::bindings);

  py::class_<ParamSpec>(mod, "ParamSpec")
      .def(py::init<>())
      .def_readwrite("params", &ParamSpec::params)
      .def("dim", &ParamSpec::dim)
      .def("names", &ParamSpec::names);

  mod.def("to_transformed", &to_transformed, py::arg("spec"), py::arg("theta_natural"));
  mod.def("to_natural", &to_natural, py::arg("spec"), py::arg("y_transformed"));
  mod.def("apply_params",
          [](const ParamSpec& spec, const dvec& theta, const SystemModel& model,
             const CostModel& cost) {
            SystemModel m = model;
            CostModel c = cost;
            apply_params(spec, theta, m, c);
            return py::make_tuple(m, c);
          },
          py::arg("spec"), py::arg("theta_natural"), py::arg("model"), py::arg("cost"),
          "Returns (model, cost) copies with theta written in");
  mod.def("set_bounds_around",
          [](const ParamSpec& spec, const dvec& theta_ref, double half_width) {
            ParamSpec s = spec;
            set_bounds_around(s, theta_ref, half_width);
            return s;
          },
          py::arg("spec"), py::arg("theta_ref"), py::arg("half_width") = 3.0,
          "Returns a copy with bounds centered on theta_ref");

  py::class_<FitOptions>(mod, "FitOptions")
      .def(py::init<>())
      .def_readwrite("n_starts", &FitOptions::n_starts)
      .def_readwrite("budget_per_start", &FitOptions::budget_per_start)
      .def_readwrite("seed", &FitOptions::seed)
      .def_readwrite("n_threads", &FitOptions::n_threads)
      .def_readwrite("loglik", &FitOptions::loglik)
      .def_readwrite("solve", &FitOptions::solve)
      .def_readwrite("rho_begin", &FitOptions::rho_begin)
      .def_readwrite("rho_end", &FitOptions::rho_end)
      .def_readwrite("dfo_max_points", &FitOptions::dfo_max_points)
      .def_readwrite("baseline_plain_lqg", &FitOptions::baseline_plain_lqg);

  py::class_<StartReport>(mod, "StartReport")
      .def_readonly("theta_init", &StartReport::theta_init)
      .def_readonly("theta", &StartReport::theta)
      .def_readonly("loglik", &StartReport::loglik)
      .def_readonly("evals", &StartReport::evals)
      .def_readonly("converged", &StartReport::converged);

  py::class_<FitResult>(mod, "FitResult")
      .def_readonly("theta_mle", &FitResult::theta_mle)
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("starts", &FitResult::starts)
      .def_readonly("best_start_index", &FitResult::best_start_index)
      .def_readonly("seed", &FitResult::seed)
      .def_readonly("total_evals", &FitResult::total_evals);

  mod.def("neg_loglik_objective",
          [](const SystemModel& model, const CostModel& cost, const ExperimenterModel* exp,
             const ParamSpec& spec, const TrajectoryDataset& data, const dvec& theta,
             const FitOptions& options) {
            return neg_loglik_objective(model, cost, exp, spec, data, theta, options);
          },
          py::arg("model"), py::arg("cost"), py::arg("exp"), py::arg("spec"), py::arg("data"),
          py::arg("theta_natural"), py::arg("options") = FitOptions{},
          py::call_guard<py::gil_scoped_release>());
  mod.def("fit_mle",
          [](const SystemModel& model, const CostModel& cost, const ExperimenterModel* exp,
             const ParamSpec& spec, const TrajectoryDataset& data, const FitOptions& options) {
            return fit_mle(model, cost, exp, spec, data, options);
          },
          py::arg("model"), py::arg("cost"), py::arg("exp"), py::arg("spec"), py::arg("data"),
          py::arg("options") = FitOptions{}, py::call_guard<py::gil_scoped_release>());

  // ---- problems ----
  py::class_<Problem>(mod, "Problem")
      .def_readwrite("name", &Problem::name)
      .def_readwrite("model", &Problem::model)
      .def_readwrite("cost", &Problem::cost)
      .def_readwrite("exp", &Problem::exp)
      .def_readwrite("spec", &Problem::spec)
      .def_readwrite("theta_true", &Problem::theta_true);

  py::class_<ReachingParams>(mod, "ReachingParams")
      .def(py::init<>())
      .def_readwrite("dt", &ReachingParams::dt)
      .def_readwrite("duration", &ReachingParams::duration)
      .def_readwrite("target", &ReachingParams::target)
      .def_readwrite("tau_act", &ReachingParams::tau_act)
      .def_readwrite("tau_exc", &ReachingParams::tau_exc)
      .def_readwrite("sdn_scale", &ReachingParams::sdn_scale)
      .def_readwrite("obs_pos_sd", &ReachingParams::obs_pos_sd)
      .def_readwrite("process_sd", &ReachingParams::process_sd)
      .def_readwrite("internal_sd", &ReachingParams::internal_sd)
      .def_readwrite("init_sd", &ReachingParams::init_sd)
      .def_readwrite("exp_obs_sd", &ReachingParams::exp_obs_sd)
      .def_readwrite("r", &ReachingParams::r)
      .def_readwrite("v", &ReachingParams::v)
      .def_readwrite("f", &ReachingParams::f);

  py::class_<SaccadeParams>(mod, "SaccadeParams")
      .def(py::init<>())
      .def_readwrite("dt", &SaccadeParams::dt)
      .def_readwrite("fixation", &SaccadeParams::fixation)
      .def_readwrite("duration", &SaccadeParams::duration)
      .def_readwrite("tau1", &SaccadeParams::tau1)
      .def_readwrite("tau2", &SaccadeParams::tau2)
      .def_readwrite("from_deg", &SaccadeParams::from_deg)
      .def_readwrite("to_deg", &SaccadeParams::to_deg)
      .def_readwrite("accuracy_weight", &SaccadeParams::accuracy_weight)
      .def_readwrite("sdn_scale", &SaccadeParams::sdn_scale)
      .def_readwrite("obs_angle_sd", &SaccadeParams::obs_angle_sd)
      .def_readwrite("obs_vel_sd", &SaccadeParams::obs_vel_sd)
      .def_readwrite("process_sd", &SaccadeParams::process_sd)
      .def_readwrite("internal_sd", &SaccadeParams::internal_sd)
      .def_readwrite("init_sd", &SaccadeParams::init_sd)
      .def_readwrite("r", &SaccadeParams::r);

  py::class_<RandomProblemParams>(mod, "RandomProblemParams")
      .def(py::init<>())
      .def_readwrite("state_dim", &RandomProblemParams::state_dim)
      .def_readwrite("control_dim", &RandomProblemParams::control_dim)
      .def_readwrite("horizon", &RandomProblemParams::horizon)
      .def_readwrite("mult_noise_lo", &RandomProblemParams::mult_noise_lo)
      .def_readwrite("mult_noise_hi", &RandomProblemParams::mult_noise_hi)
      .def_readwrite("lkj_eta", &RandomProblemParams::lkj_eta)
      .def_readwrite("r_vec", &RandomProblemParams::r_vec)
      .def_readwrite("r_lo", &RandomProblemParams::r_lo)
      .def_readwrite("r_hi", &RandomProblemParams::r_hi)
      .def_readwrite("init_sd", &RandomProblemParams::init_sd);

  mod.def("make_reaching", &make_reaching, py::arg("params") = ReachingParams{});
  mod.def("make_saccade", &make_saccade, py::arg("params") = SaccadeParams{});
  mod.def("make_random_problem", &make_random_problem, py::arg("seed"),
          py::arg("params") = RandomProblemParams{});

  // ---- io ----
  py::class_<ModelConfig>(mod, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("model", &ModelConfig::model)
      .def_readwrite("cost", &ModelConfig::cost)
      .def_readwrite("exp", &ModelConfig::exp)
      .def_readwrite("param_spec", &ModelConfig::param_spec)
      .def_readwrite("theta", &ModelConfig::theta)
      .def_readwrite("name", &ModelConfig::name);

  mod.def("config_to_json", &config_to_json, py::arg("config"));
  mod.def("config_from_json", &config_from_json, py::arg("text"));
  mod.def("param_spec_to_json_text", &param_spec_to_json_text, py::arg("spec"));
  mod.def("param_spec_from_json_text", &param_spec_from_json_text, py::arg("text"));
  mod.def("save_config", &save_config, py::arg("path"), py::arg("config"));
  mod.def("load_config", &load_config, py::arg("path"));
  mod.def("save_dataset", &save_dataset, py::arg("path"), py::arg("data"));
  mod.def("load_dataset", &load_dataset, py::arg("path"));
  mod.def("check_dataset_matches",
          [](const TrajectoryDataset& data, const SystemModel& model, const CostModel& cost,
             const ExperimenterModel* exp) {
            check_dataset_matches(data, model, cost, exp);
          },
          py::arg("data"), py::arg("model"), py::arg("cost"), py::arg("exp") = nullptr);

  // ---- metrics ----
  py::enum_<TrajectoryField>(mod, "TrajectoryField")
      .value("State", TrajectoryField::State)
      .value("Estimate", TrajectoryField::Estimate)
      .value("Control", TrajectoryField::Control)
      .value("AgentObs", TrajectoryField::AgentObs)
      .value("ExpObs", TrajectoryField::ExpObs);

  py::class_<SlopeFit>(mod, "SlopeFit")
      .def_readonly("slope", &SlopeFit::slope)
      .def_readonly("intercept", &SlopeFit::intercept);

  mod.def("per_param_log_error", &per_param_log_error, py::arg("theta_true"),
          py::arg("theta_hat"), py::arg("log_base") = kNaturalLogBase);
  mod.def("log_rmse", &log_rmse, py::arg("theta_true"), py::arg("theta_hat"),
          py::arg("log_base") = kNaturalLogBase);
  mod.def("empirical_moments", &empirical_moments, py::arg("data"), py::arg("field"),
          py::arg("dims") = std::vector<int>{});
  mod.def("select_dims", &select_dims, py::arg("beliefs"), py::arg("dims"));
  mod.def("kl_gaussian", &kl_gaussian, py::arg("p"), py::arg("q"), py::arg("jitter") = 1e-9);
  mod.def("symmetrized_kl", &symmetrized_kl, py::arg("p"), py::arg("q"),
          py::arg("jitter") = 1e-9);
  mod.def("mean_skl_over_time", &mean_skl_over_time, py::arg("a"), py::arg("b"),
          py::arg("jitter") = 1e-9);
  mod.def("fit_convergence_rate", &fit_convergence_rate, py::arg("n"), py::arg("err"));
}
