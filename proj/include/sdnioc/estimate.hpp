#pragma once

// Maximum-likelihood recovery of cost/model parameters from recorded
// trajectories: a parameter spec maps a small vector theta into matrix
// entries, the objective is the (approximate) dataset log-likelihood, and
// optimization is multi-start derivative-free search in transformed
// (typically log10) coordinates.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdnioc/dfo.hpp"
#include "sdnioc/likelihood.hpp"
#include "sdnioc/model.hpp"
#include "sdnioc/simulate.hpp"
#include "sdnioc/solver.hpp"

namespace sdnioc {

enum class ParamTransform { Log10, Identity };

enum class TargetMatrix { Q, R, A, B, H, V, W, E, C, D };

TargetMatrix target_from_string(const std::string& name);
std::string target_to_string(TargetMatrix target);

// One write of a parameter into the model: entry (row, col) of the target
// receives scale * theta^power. time_index -1 writes every slot of a
// time-varying target; list_index selects the C/D list element.
struct ParamBinding {
  TargetMatrix target = TargetMatrix::R;
  int list_index = 0;
  int time_index = -1;
  int row = 0;
  int col = 0;
  double scale = 1.0;
  int power = 1;
};

struct ParamEntry {
  std::string name;
  ParamTransform transform = ParamTransform::Log10;
  // Bounds in transformed units (decades for Log10); set_bounds_around
  // centers them on a reference theta.
  double lo = 0.0;
  double hi = 0.0;
  std::vector<ParamBinding> bindings;
};

struct ParamSpec {
  std::vector<ParamEntry> params;

  std::size_t dim() const { return params.size(); }
  std::vector<std::string> names() const;
};

// Natural <-> transformed coordinates.
dvec to_transformed(const ParamSpec& spec, const dvec& theta_natural);
dvec to_natural(const ParamSpec& spec, const dvec& y_transformed);

// Writes theta (natural units) into copies of the base model/cost. Entries
// whose bounds are set (lo < hi) reject theta outside them.
void apply_params(const ParamSpec& spec, const dvec& theta_natural,
                  SystemModel& model, CostModel& cost);

// Centers each Log10 parameter's bounds +-half_width decades around ref;
// Identity parameters get [ref - half_width, ref + half_width].
void set_bounds_around(ParamSpec& spec, const dvec& theta_ref, double half_width = 3.0);

struct FitOptions {
  int n_starts = 10;
  int budget_per_start = 500;
  uint64_t seed = 0;
  int n_threads = 0;  // 0 = hardware concurrency; starts are parallelized
  LoglikOptions loglik;
  SolveOptions solve;
  double rho_begin = -1.0;  // <= 0: 0.25 * smallest transformed bound width
  double rho_end = 1e-6;
  int dfo_max_points = 0;  // <= 0: full quadratic complement
  // Baseline mode: drop the C/D terms after applying theta and score with the
  // exact linear-Gaussian likelihood instead of the moment-matched one.
  bool baseline_plain_lqg = false;
};

struct StartReport {
  dvec theta_init;  // natural units, the sampled initial point
  dvec theta;       // natural units, the point the start ended at
  double loglik = 0.0;
  int evals = 0;
  bool converged = false;
};

struct FitResult {
  dvec theta_mle;  // natural units
  double loglik = 0.0;
  std::vector<StartReport> starts;
  int best_start_index = -1;  // best loglik, converged starts preferred
  uint64_t seed = 0;
  int total_evals = 0;
};

// Negative dataset log-likelihood at theta (natural units): applies the
// parameters, re-solves the control/filter gains, evaluates the approximate
// likelihood. Solver or likelihood failure yields +inf.
double neg_loglik_objective(const SystemModel& base_model, const CostModel& base_cost,
                            const ExperimenterModel* exp, const ParamSpec& spec,
                            const TrajectoryDataset& data, const dvec& theta_natural,
                            const FitOptions& opts);

// Multi-start maximization of the dataset log-likelihood. Deterministic for
// a fixed seed regardless of n_threads. Throws NumericalError when every
// start fails (no finite likelihood found), with per-start diagnostics.
FitResult fit_mle(const SystemModel& base_model, const CostModel& base_cost,
                  const ExperimenterModel* exp, const ParamSpec& spec,
                  const TrajectoryDataset& data, const FitOptions& opts = {});

}  // namespace sdnioc
