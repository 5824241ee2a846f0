// Command-line front end: problem construction, simulation, likelihood
// fitting, belief tracking, and benchmark reports over documented JSON/CSV
// formats.
//
// Exit codes: 0 success, 2 usage or input error, 1 numerical failure.
// stdout carries only the paths of the files written; diagnostics go to
// stderr. SDNIOC_SEED and SDNIOC_THREADS override the built-in defaults.

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdnioc/estimate.hpp"
#include "sdnioc/likelihood.hpp"
#include "sdnioc/metrics.hpp"
#include "sdnioc/model_io.hpp"
#include "sdnioc/problems.hpp"
#include "sdnioc/rng.hpp"
#include "sdnioc/simulate.hpp"
#include "sdnioc/solver.hpp"
#include "sdnioc/trajectory_io.hpp"

namespace {

using nlohmann::json;
using namespace sdnioc;

constexpr const char* kToolVersion = "0.1.0";

uint64_t env_seed_default() {
  const char* s = std::getenv("SDNIOC_SEED");
  if (s == nullptr || *s == '\0') return 0;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || errno == ERANGE)
    throw std::invalid_argument("SDNIOC_SEED must be a decimal unsigned integer");
  return static_cast<uint64_t>(v);
}

int env_threads_default() {
  const char* s = std::getenv("SDNIOC_THREADS");
  if (s == nullptr || *s == '\0') return 0;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0' || errno == ERANGE || v < 0 || v > 4096)
    throw std::invalid_argument("SDNIOC_THREADS must be a small non-negative integer");
  return static_cast<int>(v);
}

std::string now_iso8601_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("short write to " + path);
}

json vec_json(const dvec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const dmat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 != 0 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct CliContext {
  std::vector<std::string> argv;
  int threads = 0;
};

// Writes <primary_out>.manifest.json and lists every produced file on stdout.
void emit_run(const CliContext& ctx, const std::string& primary_out,
              const std::vector<std::string>& config_paths, uint64_t seed,
              const std::vector<std::string>& outputs) {
  std::string command;
  for (std::size_t i = 0; i < ctx.argv.size(); ++i) {
    if (i > 0) command += ' ';
    command += ctx.argv[i];
  }
  json man;
  man["command"] = command;
  man["config_paths"] = config_paths;
  man["seed"] = seed;
  man["timestamp"] = now_iso8601_utc();
  man["tool_version"] = kToolVersion;
  man["output_paths"] = outputs;
  const std::string man_path = primary_out + ".manifest.json";
  spit(man_path, man.dump(2) + "\n");
  for (const std::string& p : outputs) std::cout << p << "\n";
  std::cout << man_path << "\n";
}

// "name=value[,name=value...]" over the spec's parameter names.
std::map<std::string, double> parse_assignments(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--params entries must look like name=value: '" + tok + "'");
    const std::string name = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("--params: bad number '" + val + "' for " + name);
    }
    if (used != val.size())
      throw std::invalid_argument("--params: bad number '" + val + "' for " + name);
    if (!out.emplace(name, v).second)
      throw std::invalid_argument("--params: duplicate entry for " + name);
  }
  if (out.empty()) throw std::invalid_argument("--params is empty");
  return out;
}

// Config theta supplies defaults; --params overrides by name. Every spec
// parameter must end up with a value.
dvec resolve_theta(const ModelConfig& config, const std::string& params_flag) {
  const ParamSpec& spec = *config.param_spec;
  const std::size_t n = spec.dim();
  dvec theta = dvec::Zero(static_cast<Eigen::Index>(n));
  std::vector<bool> have(n, false);
  if (config.theta) {
    theta = *config.theta;
    have.assign(n, true);
  }
  if (!params_flag.empty()) {
    for (const auto& [name, value] : parse_assignments(params_flag)) {
      std::size_t idx = n;
      for (std::size_t i = 0; i < n; ++i)
        if (spec.params[i].name == name) {
          idx = i;
          break;
        }
      if (idx == n) throw std::invalid_argument("--params: unknown parameter '" + name + "'");
      theta(static_cast<Eigen::Index>(idx)) = value;
      have[idx] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!have[i])
      throw std::invalid_argument("parameter '" + spec.params[i].name +
                                  "' has no value; pass it via --params");
  return theta;
}

// ---- problem ----

void save_problem(const CliContext& ctx, const Problem& prob, const std::string& out,
                  uint64_t seed) {
  ModelConfig config;
  config.model = prob.model;
  config.cost = prob.cost;
  config.exp = prob.exp;
  config.param_spec = prob.spec;
  config.theta = prob.theta_true;
  config.name = prob.name;
  save_config(out, config);
  emit_run(ctx, out, {}, seed, {out});
}

// ---- simulate ----

struct SimArgs {
  std::string config;
  std::string params;
  std::string dump_gains;
  std::string out = "data.csv";
  int trials = 100;
  uint64_t seed = 0;
  bool partial = false;
  bool zero_noise = false;
};

void run_simulate(const CliContext& ctx, const SimArgs& a) {
  ModelConfig config = load_config(a.config);
  SystemModel model = config.model;
  CostModel cost = config.cost;
  if (config.param_spec && (config.theta.has_value() || !a.params.empty())) {
    const dvec theta = resolve_theta(config, a.params);
    apply_params(*config.param_spec, theta, model, cost);
  } else if (!a.params.empty()) {
    throw std::invalid_argument("simulate: config has no param_spec, --params cannot apply");
  }
  if (a.partial && !config.exp)
    throw std::invalid_argument(
        "simulate: --partial-obs needs an experimenter model in the config");
  if (a.zero_noise) {
    model.V.setZero();
    model.W.setZero();
    model.E.setZero();
    model.C_list.clear();
    model.D_list.clear();
    model.init_state_cov.setZero();
    model.init_estimate_cov.setZero();
    if (config.exp) config.exp->N.setZero();
  }
  const ExperimenterModel* exp = config.exp ? &*config.exp : nullptr;
  validate_or_throw(model, cost, exp);
  const SolveResult solved = solve_gains(model, cost);
  if (!a.dump_gains.empty()) {
    json g;
    g["T"] = solved.gains.L.size();
    json L = json::array();
    json K = json::array();
    for (const dmat& m : solved.gains.L) L.push_back(mat_json(m));
    for (const dmat& m : solved.gains.K) K.push_back(mat_json(m));
    g["L"] = std::move(L);
    g["K"] = std::move(K);
    g["expected_cost"] = solved.expected_cost;
    g["iterations"] = solved.iterations;
    g["converged"] = solved.converged;
    spit(a.dump_gains, g.dump(2) + "\n");
  }
  TrajectoryDataset data = rollout_batch(model, solved.gains,
                                         static_cast<std::size_t>(a.trials), a.seed, exp,
                                         ctx.threads);
  data.fingerprint = model_fingerprint(model, cost, exp);
  if (a.partial) {
    // The "observed" file withholds everything the experimenter cannot see.
    for (Trajectory& tr : data.trials) {
      tr.states.resize(0, 0);
      tr.estimates.resize(0, 0);
      tr.controls.resize(0, 0);
      tr.agent_obs.resize(0, 0);
    }
  }
  save_dataset(a.out, data);
  std::vector<std::string> outputs{a.out, a.out + ".meta.json"};
  if (!a.dump_gains.empty()) outputs.push_back(a.dump_gains);
  emit_run(ctx, a.out, {a.config}, a.seed, outputs);
}

// ---- fit ----

struct FitArgs {
  std::string config;
  std::string data;
  std::string spec_path;
  std::string baseline;
  std::string out = "fit.json";
  int starts = 10;
  int budget = 500;
  uint64_t seed = 0;
  double rho_end = 1e-6;
};

void run_fit(const CliContext& ctx, const FitArgs& a) {
  ModelConfig config = load_config(a.config);
  ParamSpec spec;
  std::vector<std::string> config_paths{a.config};
  if (!a.spec_path.empty()) {
    spec = param_spec_from_json_text(slurp(a.spec_path));
    config_paths.push_back(a.spec_path);
  } else if (config.param_spec) {
    spec = *config.param_spec;
  } else {
    throw std::invalid_argument("fit: config has no param_spec and no --spec was given");
  }
  const TrajectoryDataset data = load_dataset(a.data);
  if (data.trials.empty()) throw IoError("fit: dataset " + a.data + " holds no trials");
  // State rows present means the full-observability likelihood; an
  // experimenter model is only consulted when states were withheld.
  const bool partial = data.trials.front().states.rows() == 0;
  const ExperimenterModel* exp = nullptr;
  if (partial) {
    if (!config.exp)
      throw std::invalid_argument(
          "fit: dataset has no state rows; the config must provide an experimenter model");
    if (data.trials.front().exp_obs.rows() == 0)
      throw IoError("fit: dataset holds neither states nor experimenter observations");
    exp = &*config.exp;
  }
  FitOptions opts;
  opts.n_starts = a.starts;
  opts.budget_per_start = a.budget;
  opts.seed = a.seed;
  opts.n_threads = ctx.threads;
  opts.rho_end = a.rho_end;
  opts.baseline_plain_lqg = (a.baseline == "plain-lqg");
  const FitResult fit = fit_mle(config.model, config.cost, exp, spec, data, opts);

  json out;
  json theta = json::object();
  for (std::size_t i = 0; i < spec.dim(); ++i)
    theta[spec.params[i].name] = fit.theta_mle(static_cast<Eigen::Index>(i));
  out["theta_mle"] = std::move(theta);
  out["loglik"] = fit.loglik;
  json starts = json::array();
  for (const StartReport& s : fit.starts) {
    json row;
    row["init"] = vec_json(s.theta_init);
    row["theta"] = vec_json(s.theta);
    row["loglik"] = s.loglik;  // non-finite serializes as null
    row["evals"] = s.evals;
    row["converged"] = s.converged;
    starts.push_back(std::move(row));
  }
  out["starts"] = std::move(starts);
  out["best_start_index"] = fit.best_start_index;
  out["total_evals"] = fit.total_evals;
  out["spec"] = json::parse(param_spec_to_json_text(spec));
  out["seed"] = fit.seed;
  if (opts.baseline_plain_lqg) out["baseline"] = "plain-lqg";
  spit(a.out, out.dump(2) + "\n");
  emit_run(ctx, a.out, config_paths, a.seed, {a.out});
}

// ---- track ----

struct TrackArgs {
  std::string config;
  std::string data;
  std::string params;
  std::string out = "beliefs.csv";
  std::string cov_json;
  bool partial = false;
};

void run_track(const CliContext& ctx, const TrackArgs& a) {
  ModelConfig config = load_config(a.config);
  if (!config.param_spec)
    throw std::invalid_argument("track: config has no param_spec, --params cannot apply");
  SystemModel model = config.model;
  CostModel cost = config.cost;
  const dvec theta = resolve_theta(config, a.params);
  apply_params(*config.param_spec, theta, model, cost);
  const ExperimenterModel* exp = config.exp ? &*config.exp : nullptr;
  validate_or_throw(model, cost, exp);
  const TrajectoryDataset data = load_dataset(a.data);
  if (data.trials.empty()) throw IoError("track: dataset " + a.data + " holds no trials");
  const bool partial = a.partial || data.trials.front().states.rows() == 0;
  if (partial && exp == nullptr)
    throw std::invalid_argument(
        "track: partial observability needs an experimenter model in the config");
  if (partial && data.trials.front().exp_obs.rows() == 0)
    throw IoError("track: dataset holds no experimenter observations");
  const SolveResult solved = solve_gains(model, cost);

  std::ofstream csv(a.out, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write " + a.out);
  // Long format; components are the agent's estimate under full
  // observability and the stacked (state, estimate) under partial.
  csv << "trial,t,component,mean,var\n";
  char buf[64];
  json cov_trials = json::array();
  for (std::size_t i = 0; i < data.trials.size(); ++i) {
    const Trajectory& tr = data.trials[i];
    const TrajectoryLoglik ll =
        partial ? log_likelihood_trajectory(model, *exp, solved.gains, tr.exp_obs)
                : log_likelihood_trajectory(model, solved.gains, tr.states);
    json steps = json::array();
    for (std::size_t t = 0; t < ll.beliefs.size(); ++t) {
      const GaussianBelief& b = ll.beliefs[t];
      for (Eigen::Index c = 0; c < b.dim(); ++c) {
        csv << i << ',' << t << ',' << c << ',';
        std::snprintf(buf, sizeof buf, "%.17g", b.mean(c));
        csv << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", b.cov(c, c));
        csv << buf << '\n';
      }
      if (!a.cov_json.empty())
        steps.push_back(json{{"t", t}, {"mean", vec_json(b.mean)}, {"cov", mat_json(b.cov)}});
    }
    if (!a.cov_json.empty())
      cov_trials.push_back(json{{"trial", i}, {"loglik", ll.total}, {"steps", std::move(steps)}});
  }
  csv.flush();
  if (!csv) throw IoError("short write to " + a.out);
  csv.close();
  std::vector<std::string> outputs{a.out};
  if (!a.cov_json.empty()) {
    json cov;
    cov["trials"] = std::move(cov_trials);
    spit(a.cov_json, cov.dump(2) + "\n");
    outputs.push_back(a.cov_json);
  }
  emit_run(ctx, a.out, {a.config}, 0, outputs);
}

// ---- bench ----

struct BenchRandomArgs {
  int count = 10;
  int trials = 50;
  int starts = 4;
  int budget = 120;
  uint64_t seed = 0;
  std::string out = "bench_random.json";
};

void run_bench_random(const CliContext& ctx, const BenchRandomArgs& a) {
  json problems = json::array();
  std::vector<std::vector<double>> abs_err(0);
  std::vector<double> rmse_all;
  int within = 0;
  for (int j = 0; j < a.count; ++j) {
    const uint64_t pseed = Rng::derive_seed(a.seed, 2 * static_cast<uint64_t>(j));
    const uint64_t dseed = Rng::derive_seed(a.seed, 2 * static_cast<uint64_t>(j) + 1);
    const Problem prob = make_random_problem(pseed);
    const SolveResult solved = solve_gains(prob.model, prob.cost);
    TrajectoryDataset data =
        rollout_batch(prob.model, solved.gains, static_cast<std::size_t>(a.trials), dseed,
                      prob.exp_ptr(), ctx.threads);
    data.fingerprint = model_fingerprint(prob.model, prob.cost, prob.exp_ptr());
    FitOptions opts;
    opts.n_starts = a.starts;
    opts.budget_per_start = a.budget;
    opts.seed = dseed;
    opts.n_threads = ctx.threads;
    const FitResult fit = fit_mle(prob.model, prob.cost, prob.exp_ptr(), prob.spec, data, opts);
    const dvec err = per_param_log_error(prob.theta_true, fit.theta_mle, 10.0);
    if (abs_err.empty()) abs_err.resize(static_cast<std::size_t>(err.size()));
    json abs_arr = json::array();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < err.size(); ++c) {
      const double e = std::abs(err(c));
      abs_err[static_cast<std::size_t>(c)].push_back(e);
      worst = std::max(worst, e);
      abs_arr.push_back(e);
    }
    if (worst <= 0.3) ++within;
    rmse_all.push_back(log_rmse(prob.theta_true, fit.theta_mle, 10.0));
    json row;
    row["problem_seed"] = pseed;
    row["data_seed"] = dseed;
    row["theta_true"] = vec_json(prob.theta_true);
    row["theta_mle"] = vec_json(fit.theta_mle);
    row["abs_log10_err"] = std::move(abs_arr);
    row["loglik"] = fit.loglik;
    problems.push_back(std::move(row));
  }
  json report;
  report["kind"] = "random";
  report["count"] = a.count;
  report["trials"] = a.trials;
  report["starts"] = a.starts;
  report["budget"] = a.budget;
  report["seed"] = a.seed;
  report["log_base"] = 10.0;
  report["problems"] = std::move(problems);
  json med = json::array();
  for (const auto& v : abs_err) med.push_back(median(v));
  report["per_param_log_err"] = std::move(med);
  report["log_rmse"] = median(rmse_all);
  report["frac_within_0_3"] = a.count > 0 ? static_cast<double>(within) / a.count : 0.0;
  spit(a.out, report.dump(2) + "\n");
  emit_run(ctx, a.out, {}, a.seed, {a.out});
}

struct BenchGridArgs {
  int reps = 2;
  int trials = 30;
  int starts = 3;
  int budget = 100;
  uint64_t seed = 0;
  std::vector<double> r_values{1e-5, 1e-4};
  std::vector<double> v_values{0.1, 0.4};
  double f = 0.02;
  std::string out = "bench_grid.json";
};

void run_bench_grid(const CliContext& ctx, const BenchGridArgs& a) {
  json grid = json::array();
  std::vector<std::vector<double>> abs_err(3);
  std::vector<double> rmse_all;
  uint64_t run_index = 0;
  for (const double r : a.r_values) {
    for (const double v : a.v_values) {
      ReachingParams rp;
      rp.r = r;
      rp.v = v;
      rp.f = a.f;
      const Problem prob = make_reaching(rp);
      const SolveResult solved = solve_gains(prob.model, prob.cost);
      json reps = json::array();
      std::vector<double> cell_rmse;
      for (int rep = 0; rep < a.reps; ++rep) {
        const uint64_t dseed = Rng::derive_seed(a.seed, run_index++);
        TrajectoryDataset data =
            rollout_batch(prob.model, solved.gains, static_cast<std::size_t>(a.trials), dseed,
                          nullptr, ctx.threads);
        data.fingerprint = model_fingerprint(prob.model, prob.cost, nullptr);
        FitOptions opts;
        opts.n_starts = a.starts;
        opts.budget_per_start = a.budget;
        opts.seed = dseed;
        opts.n_threads = ctx.threads;
        const FitResult fit =
            fit_mle(prob.model, prob.cost, nullptr, prob.spec, data, opts);
        const dvec err = per_param_log_error(prob.theta_true, fit.theta_mle, 10.0);
        for (Eigen::Index c = 0; c < err.size(); ++c)
          abs_err[static_cast<std::size_t>(c)].push_back(std::abs(err(c)));
        const double rmse = log_rmse(prob.theta_true, fit.theta_mle, 10.0);
        cell_rmse.push_back(rmse);
        rmse_all.push_back(rmse);
        json rj;
        rj["data_seed"] = dseed;
        rj["theta_mle"] = vec_json(fit.theta_mle);
        rj["log_rmse"] = rmse;
        reps.push_back(std::move(rj));
      }
      json cell;
      cell["r"] = r;
      cell["v"] = v;
      cell["f"] = a.f;
      cell["reps"] = std::move(reps);
      cell["median_log_rmse"] = median(cell_rmse);
      grid.push_back(std::move(cell));
    }
  }
  json report;
  report["kind"] = "reaching-grid";
  report["reps"] = a.reps;
  report["trials"] = a.trials;
  report["starts"] = a.starts;
  report["budget"] = a.budget;
  report["seed"] = a.seed;
  report["log_base"] = 10.0;
  report["grid"] = std::move(grid);
  json med = json::array();
  for (const auto& v : abs_err) med.push_back(median(v));
  report["per_param_log_err"] = std::move(med);
  report["log_rmse"] = median(rmse_all);
  spit(a.out, report.dump(2) + "\n");
  emit_run(ctx, a.out, {}, a.seed, {a.out});
}

struct BenchMmArgs {
  int trials = 500;
  uint64_t seed = 0;
  std::string out = "bench_mm.json";
};

void run_bench_mm(const CliContext& ctx, const BenchMmArgs& a) {
  const Problem prob = make_reaching();
  const SolveResult solved = solve_gains(prob.model, prob.cost);
  const TrajectoryDataset data =
      rollout_batch(prob.model, solved.gains, static_cast<std::size_t>(a.trials), a.seed,
                    nullptr, ctx.threads);
  const auto analytic = predict_state_distribution(prob.model, solved.gains);
  const auto empirical = empirical_moments(data, TrajectoryField::State);
  const double skl = mean_skl_over_time(analytic, empirical);
  // The baseline experimenter models the same behavior as additive-noise
  // LQG: matched average noise power, its own re-solved gains.
  const SystemModel base = with_matched_additive_noise(prob.model, data);
  const SolveResult base_solved = solve_gains(base, prob.cost);
  const auto base_analytic = predict_state_distribution(base, base_solved.gains);
  const double base_skl = mean_skl_over_time(base_analytic, empirical);

  // One likelihood evaluation = gains from scratch + a 100-trajectory score.
  const TrajectoryDataset timing_data =
      rollout_batch(prob.model, solved.gains, 100, Rng::derive_seed(a.seed, 9001), nullptr,
                    ctx.threads);
  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult timed = solve_gains(prob.model, prob.cost);
  const double ll = log_likelihood_dataset(prob.model, timed.gains, timing_data, {}, 1);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json report;
  report["kind"] = "moment-matching";
  report["trials"] = a.trials;
  report["seed"] = a.seed;
  report["mean_skl"] = skl;
  report["baseline_mean_skl"] = base_skl;
  report["loglik"] = ll;
  report["loglik_seconds"] = secs;
  report["solver_iterations"] = solved.iterations;
  spit(a.out, report.dump(2) + "\n");
  emit_run(ctx, a.out, {}, a.seed, {a.out});
}

}  // namespace

int main(int argc, char** argv) {
  CliContext ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{
      "LQG with signal-dependent noise: solve, simulate, fit, track, benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  try {
    const uint64_t seed_env = env_seed_default();
    ctx.threads = env_threads_default();
    app.add_option("--threads", ctx.threads, "worker threads, 0 = all cores")
        ->capture_default_str();

    // problem
    auto* problem = app.add_subcommand("problem", "write a model-config JSON file");
    problem->require_subcommand(1);
    problem->fallthrough();

    ReachingParams reach;
    std::string reach_out = "reaching.json";
    auto* reaching =
        problem->add_subcommand("reaching", "planar reaching with muscle dynamics");
    reaching->fallthrough();
    reaching->add_option("--r", reach.r, "control effort weight")->capture_default_str();
    reaching->add_option("--v", reach.v, "terminal velocity weight")->capture_default_str();
    reaching->add_option("--f", reach.f, "terminal force weight")->capture_default_str();
    reaching->add_option("--dt", reach.dt, "time step, s")->capture_default_str();
    reaching->add_option("--duration", reach.duration, "movement duration, s")
        ->capture_default_str();
    reaching->add_option("--target", reach.target, "target position, m")
        ->capture_default_str();
    reaching->add_option("--out", reach_out, "output path")->capture_default_str();
    reaching->callback([&] { save_problem(ctx, make_reaching(reach), reach_out, 0); });

    SaccadeParams sacc;
    std::string sacc_out = "saccade.json";
    auto* saccade =
        problem->add_subcommand("saccade", "saccadic gaze shift with oculomotor plant");
    saccade->fallthrough();
    saccade->add_option("--r", sacc.r, "control effort weight")->capture_default_str();
    saccade->add_option("--dt", sacc.dt, "time step, s")->capture_default_str();
    saccade->add_option("--from", sacc.from_deg, "initial target, deg")
        ->capture_default_str();
    saccade->add_option("--to", sacc.to_deg, "final target, deg")->capture_default_str();
    saccade->add_option("--duration", sacc.duration, "trial duration, s")
        ->capture_default_str();
    saccade->add_option("--fixation", sacc.fixation, "fixation time before the jump, s")
        ->capture_default_str();
    saccade->add_option("--out", sacc_out, "output path")->capture_default_str();
    saccade->callback([&] { save_problem(ctx, make_saccade(sacc), sacc_out, 0); });

    RandomProblemParams rnd;
    uint64_t rnd_seed = seed_env;
    std::vector<double> rnd_r_vec;
    std::string rnd_out = "random.json";
    auto* random_ = problem->add_subcommand("random", "seeded random fitting problem");
    random_->fallthrough();
    random_->add_option("--seed", rnd_seed, "problem seed")->capture_default_str();
    random_->add_option("--state-dim", rnd.state_dim, "state dimension")
        ->check(CLI::Range(1, 64))
        ->capture_default_str();
    random_->add_option("--control-dim", rnd.control_dim, "control dimension")
        ->check(CLI::Range(1, 16))
        ->capture_default_str();
    random_->add_option("--horizon", rnd.horizon, "number of time steps")
        ->check(CLI::Range(2, 10000))
        ->capture_default_str();
    random_->add_option("--r-vec", rnd_r_vec,
                        "true control costs (comma separated), pins R instead of sampling")
        ->delimiter(',');
    random_->add_option("--out", rnd_out, "output path")->capture_default_str();
    random_->callback([&] {
      if (!rnd_r_vec.empty())
        rnd.r_vec = Eigen::Map<const dvec>(rnd_r_vec.data(),
                                           static_cast<Eigen::Index>(rnd_r_vec.size()));
      save_problem(ctx, make_random_problem(rnd_seed, rnd), rnd_out, rnd_seed);
    });

    // simulate
    SimArgs sim;
    sim.seed = seed_env;
    auto* simulate =
        app.add_subcommand("simulate", "roll out trials under the solved optimal gains");
    simulate->fallthrough();
    simulate->add_option("config", sim.config, "model-config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--params", sim.params,
                         "parameter overrides, name=value[,name=value...]");
    simulate->add_option("--trials", sim.trials, "number of trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--seed", sim.seed, "rng seed")->capture_default_str();
    simulate->add_flag("--partial-obs", sim.partial,
                       "write only the experimenter observations");
    simulate->add_flag("--zero-noise", sim.zero_noise,
                       "zero every noise scale and initial spread");
    simulate->add_option("--dump-gains", sim.dump_gains,
                         "also write the solved gain schedule to this JSON path");
    simulate->add_option("--out", sim.out, "output CSV path")->capture_default_str();
    simulate->callback([&] { run_simulate(ctx, sim); });

    // fit
    FitArgs fita;
    fita.seed = seed_env;
    auto* fit = app.add_subcommand("fit", "maximum-likelihood parameter recovery");
    fit->fallthrough();
    fit->add_option("config", fita.config, "model-config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("data", fita.data, "trajectory CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--spec", fita.spec_path, "parameter-spec JSON overriding the config's")
        ->check(CLI::ExistingFile);
    fit->add_option("--starts", fita.starts, "number of random starts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit->add_option("--budget", fita.budget, "objective evaluations per start")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit->add_option("--seed", fita.seed, "rng seed for the starts")->capture_default_str();
    fit->add_option("--rho-end", fita.rho_end, "final trust-region radius")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fit->add_option("--baseline", fita.baseline,
                    "baseline likelihood family (drops signal-dependent terms)")
        ->check(CLI::IsMember({"plain-lqg"}));
    fit->add_option("--out", fita.out, "output JSON path")->capture_default_str();
    fit->callback([&] { run_fit(ctx, fita); });

    // track
    TrackArgs tra;
    auto* track = app.add_subcommand("track", "belief tracking over recorded trials");
    track->fallthrough();
    track->add_option("config", tra.config, "model-config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    track->add_option("data", tra.data, "trajectory CSV")
        ->required()
        ->check(CLI::ExistingFile);
    track->add_option("--params", tra.params,
                      "parameter values, name=value[,name=value...]")
        ->required();
    track->add_flag("--partial-obs", tra.partial,
                    "force the experimenter-observation likelihood");
    track->add_option("--cov-json", tra.cov_json, "also write full covariances to this path");
    track->add_option("--out", tra.out, "output CSV path")->capture_default_str();
    track->callback([&] { run_track(ctx, tra); });

    // bench
    auto* bench = app.add_subcommand("bench", "benchmark reports");
    bench->require_subcommand(1);
    bench->fallthrough();

    BenchRandomArgs bra;
    bra.seed = seed_env;
    auto* bench_random =
        bench->add_subcommand("random", "recovery sweep over seeded random problems");
    bench_random->fallthrough();
    bench_random->add_option("--count", bra.count, "number of problems")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_random->add_option("--trials", bra.trials, "trials per problem")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_random->add_option("--starts", bra.starts, "fit starts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_random->add_option("--budget", bra.budget, "evaluations per start")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_random->add_option("--seed", bra.seed, "sweep seed")->capture_default_str();
    bench_random->add_option("--out", bra.out, "output JSON path")->capture_default_str();
    bench_random->callback([&] { run_bench_random(ctx, bra); });

    BenchGridArgs bga;
    bga.seed = seed_env;
    auto* bench_grid =
        bench->add_subcommand("reaching-grid", "recovery RMSE over a (r, v) grid");
    bench_grid->fallthrough();
    bench_grid->add_option("--reps", bga.reps, "repetitions per cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_grid->add_option("--trials", bga.trials, "trials per fit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_grid->add_option("--starts", bga.starts, "fit starts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_grid->add_option("--budget", bga.budget, "evaluations per start")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench_grid->add_option("--seed", bga.seed, "sweep seed")->capture_default_str();
    bench_grid->add_option("--r-values", bga.r_values, "grid values for r")
        ->delimiter(',');
    bench_grid->add_option("--v-values", bga.v_values, "grid values for v")
        ->delimiter(',');
    bench_grid->add_option("--f", bga.f, "fixed force weight")->capture_default_str();
    bench_grid->add_option("--out", bga.out, "output JSON path")->capture_default_str();
    bench_grid->callback([&] { run_bench_grid(ctx, bga); });

    BenchMmArgs bma;
    bma.seed = seed_env;
    auto* bench_mm = bench->add_subcommand(
        "moment-matching", "analytic vs empirical trajectory summaries plus timing");
    bench_mm->fallthrough();
    bench_mm->add_option("--trials", bma.trials, "rollouts for the empirical summary")
        ->check(CLI::Range(2, 1000000))
        ->capture_default_str();
    bench_mm->add_option("--seed", bma.seed, "rollout seed")->capture_default_str();
    bench_mm->add_option("--out", bma.out, "output JSON path")->capture_default_str();
    bench_mm->callback([&] { run_bench_mm(ctx, bma); });

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
