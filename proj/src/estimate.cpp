#include "sdnioc/estimate.hpp"

#include <cmath>
#include <limits>

#include "sdnioc/rng.hpp"
#include "sdnioc/threads.hpp"

namespace sdnioc {

TargetMatrix target_from_string(const std::string& name) {
  if (name == "Q") return TargetMatrix::Q;
  if (name == "R") return TargetMatrix::R;
  if (name == "A") return TargetMatrix::A;
  if (name == "B") return TargetMatrix::B;
  if (name == "H") return TargetMatrix::H;
  if (name == "V") return TargetMatrix::V;
  if (name == "W") return TargetMatrix::W;
  if (name == "E") return TargetMatrix::E;
  if (name == "C") return TargetMatrix::C;
  if (name == "D") return TargetMatrix::D;
  throw std::invalid_argument("unknown parameter target '" + name + "'");
}

std::string target_to_string(TargetMatrix target) {
  switch (target) {
    case TargetMatrix::Q: return "Q";
    case TargetMatrix::R: return "R";
    case TargetMatrix::A: return "A";
    case TargetMatrix::B: return "B";
    case TargetMatrix::H: return "H";
    case TargetMatrix::V: return "V";
    case TargetMatrix::W: return "W";
    case TargetMatrix::E: return "E";
    case TargetMatrix::C: return "C";
    case TargetMatrix::D: return "D";
  }
  throw std::invalid_argument("unknown parameter target");
}

std::vector<std::string> ParamSpec::names() const {
  std::vector<std::string> out;
  out.reserve(params.size());
  for (const ParamEntry& p : params) out.push_back(p.name);
  return out;
}

dvec to_transformed(const ParamSpec& spec, const dvec& theta_natural) {
  if (theta_natural.size() != static_cast<Eigen::Index>(spec.dim()))
    throw std::invalid_argument("to_transformed: theta size mismatch");
  dvec y(theta_natural.size());
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    if (spec.params[i].transform == ParamTransform::Log10) {
      if (theta_natural(i) <= 0.0)
        throw std::invalid_argument("to_transformed: log10 parameter '" +
                                    spec.params[i].name + "' must be positive");
      y(i) = std::log10(theta_natural(i));
    } else {
      y(i) = theta_natural(i);
    }
  }
  return y;
}

dvec to_natural(const ParamSpec& spec, const dvec& y) {
  if (y.size() != static_cast<Eigen::Index>(spec.dim()))
    throw std::invalid_argument("to_natural: size mismatch");
  dvec theta(y.size());
  for (std::size_t i = 0; i < spec.dim(); ++i)
    theta(i) = spec.params[i].transform == ParamTransform::Log10 ? std::pow(10.0, y(i))
                                                                 : y(i);
  return theta;
}

namespace {

void write_entry(MatSeq& seq, const ParamBinding& b, double value, std::size_t horizon,
                 const std::string& name) {
  if (b.time_index >= 0 && seq.constant() && horizon > 1) {
    // A per-timestep write into a constant sequence expands it first.
    seq.slots.assign(horizon, seq.slots[0]);
  }
  auto write_one = [&](dmat& mat) {
    if (b.row < 0 || b.col < 0 || b.row >= mat.rows() || b.col >= mat.cols())
      throw std::invalid_argument("parameter '" + name + "': binding entry (" +
                                  std::to_string(b.row) + "," + std::to_string(b.col) +
                                  ") out of range");
    mat(b.row, b.col) = value;
  };
  if (b.time_index < 0) {
    for (dmat& mat : seq.slots) write_one(mat);
  } else {
    if (static_cast<std::size_t>(b.time_index) >= seq.slots.size())
      throw std::invalid_argument("parameter '" + name + "': time index out of range");
    write_one(seq.slots[static_cast<std::size_t>(b.time_index)]);
  }
}

void write_plain(dmat& mat, const ParamBinding& b, double value, const std::string& name) {
  if (b.row < 0 || b.col < 0 || b.row >= mat.rows() || b.col >= mat.cols())
    throw std::invalid_argument("parameter '" + name + "': binding entry out of range");
  mat(b.row, b.col) = value;
}

void write_list(std::vector<dmat>& list, const ParamBinding& b, double value,
                const std::string& name) {
  if (b.list_index < 0 || static_cast<std::size_t>(b.list_index) >= list.size())
    throw std::invalid_argument("parameter '" + name + "': list index out of range");
  write_plain(list[static_cast<std::size_t>(b.list_index)], b, value, name);
}

}  // namespace

void apply_params(const ParamSpec& spec, const dvec& theta_natural, SystemModel& model,
                  CostModel& cost) {
  if (theta_natural.size() != static_cast<Eigen::Index>(spec.dim()))
    throw std::invalid_argument("apply_params: theta size mismatch");
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    const ParamEntry& p = spec.params[i];
    if (p.lo < p.hi) {
      double y = theta_natural(i);
      if (p.transform == ParamTransform::Log10) {
        if (!(y > 0.0))
          throw std::invalid_argument("parameter '" + p.name + "' must be positive");
        y = std::log10(y);
      }
      const double tol = 1e-12 * (p.hi - p.lo);
      if (y < p.lo - tol || y > p.hi + tol)
        throw std::invalid_argument("parameter '" + p.name + "' is out of bounds");
    }
    for (const ParamBinding& b : p.bindings) {
      const double value = b.scale * std::pow(theta_natural(i), b.power);
      switch (b.target) {
        case TargetMatrix::Q: write_entry(cost.Q, b, value, model.horizon, p.name); break;
        case TargetMatrix::R: write_entry(cost.R, b, value, model.horizon, p.name); break;
        case TargetMatrix::A: write_entry(model.A, b, value, model.horizon, p.name); break;
        case TargetMatrix::B: write_entry(model.B, b, value, model.horizon, p.name); break;
        case TargetMatrix::H: write_entry(model.H, b, value, model.horizon, p.name); break;
        case TargetMatrix::V: write_plain(model.V, b, value, p.name); break;
        case TargetMatrix::W: write_plain(model.W, b, value, p.name); break;
        case TargetMatrix::E: write_plain(model.E, b, value, p.name); break;
        case TargetMatrix::C: write_list(model.C_list, b, value, p.name); break;
        case TargetMatrix::D: write_list(model.D_list, b, value, p.name); break;
      }
    }
  }
}

void set_bounds_around(ParamSpec& spec, const dvec& theta_ref, double half_width) {
  if (theta_ref.size() != static_cast<Eigen::Index>(spec.dim()))
    throw std::invalid_argument("set_bounds_around: size mismatch");
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    ParamEntry& p = spec.params[i];
    const double center = p.transform == ParamTransform::Log10
                              ? std::log10(theta_ref(i))
                              : theta_ref(i);
    p.lo = center - half_width;
    p.hi = center + half_width;
  }
}

double neg_loglik_objective(const SystemModel& base_model, const CostModel& base_cost,
                            const ExperimenterModel* exp, const ParamSpec& spec,
                            const TrajectoryDataset& data, const dvec& theta_natural,
                            const FitOptions& opts) {
  SystemModel model = base_model;
  CostModel cost = base_cost;
  apply_params(spec, theta_natural, model, cost);
  if (opts.baseline_plain_lqg) {
    model.C_list.clear();
    model.D_list.clear();
    const SolveResult solved = solve_gains(model, cost, opts.solve);
    return -exact_linear_loglik_dataset(model, exp, solved.gains, data, opts.loglik);
  }
  const SolveResult solved = solve_gains(model, cost, opts.solve);
  const double ll =
      exp != nullptr
          ? log_likelihood_dataset(model, *exp, solved.gains, data, opts.loglik, 1)
          : log_likelihood_dataset(model, solved.gains, data, opts.loglik, 1);
  return -ll;
}

FitResult fit_mle(const SystemModel& base_model, const CostModel& base_cost,
                  const ExperimenterModel* exp, const ParamSpec& spec,
                  const TrajectoryDataset& data, const FitOptions& opts) {
  const std::size_t dim = spec.dim();
  if (dim == 0) throw std::invalid_argument("fit_mle: empty parameter spec");
  if (data.trials.empty()) throw std::invalid_argument("fit_mle: empty dataset");
  if (opts.n_starts < 1) throw std::invalid_argument("fit_mle: need at least one start");

  dvec lo(dim), hi(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    lo(i) = spec.params[i].lo;
    hi(i) = spec.params[i].hi;
    if (!(lo(i) < hi(i)))
      throw std::invalid_argument("fit_mle: parameter '" + spec.params[i].name +
                                  "' has empty bounds");
  }

  double rho_begin = opts.rho_begin;
  if (rho_begin <= 0) rho_begin = 0.25 * (hi - lo).minCoeff();

  auto objective = [&](const dvec& y) -> double {
    try {
      return neg_loglik_objective(base_model, base_cost, exp, spec, data,
                                  to_natural(spec, y), opts);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const ValidationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<StartReport> starts(static_cast<std::size_t>(opts.n_starts));
  parallel_for(starts.size(), opts.n_threads, [&](std::size_t j) {
    Rng rng = Rng::substream(opts.seed, j);
    dvec y0(dim);
    for (std::size_t i = 0; i < dim; ++i) y0(i) = rng.uniform(lo(i), hi(i));

    DfoOptions dfo;
    dfo.rho_begin = rho_begin;
    dfo.rho_end = opts.rho_end;
    dfo.max_evals = opts.budget_per_start;
    dfo.max_points = opts.dfo_max_points;
    const DfoResult res = minimize_dfo(objective, y0, lo, hi, dfo);

    StartReport& rep = starts[j];
    rep.theta_init = to_natural(spec, y0);
    rep.theta = to_natural(spec, res.x);
    rep.loglik = -res.f;
    rep.evals = res.evals;
    rep.converged = res.converged;
  });

  FitResult out;
  out.seed = opts.seed;
  out.starts = starts;
  // Converged starts are preferred; within a preference class the highest
  // loglik wins and ties keep the lowest index.
  int best = -1;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    const StartReport& rep = starts[j];
    if (!std::isfinite(rep.loglik)) continue;
    const bool take =
        best < 0 ||
        (rep.converged && !starts[static_cast<std::size_t>(best)].converged) ||
        (rep.converged == starts[static_cast<std::size_t>(best)].converged &&
         rep.loglik > starts[static_cast<std::size_t>(best)].loglik);
    if (take) best = static_cast<int>(j);
  }
  if (best < 0) {
    std::string detail = "fit_mle: all starts failed;";
    for (std::size_t j = 0; j < starts.size(); ++j)
      detail += " start " + std::to_string(j) + ": evals=" +
                std::to_string(starts[j].evals) +
                (starts[j].converged ? " converged" : " not converged") +
                " loglik=-inf;";
    throw NumericalError(detail);
  }
  out.best_start_index = best;
  out.theta_mle = starts[static_cast<std::size_t>(best)].theta;
  out.loglik = starts[static_cast<std::size_t>(best)].loglik;
  for (const StartReport& rep : starts) out.total_evals += rep.evals;
  return out;
}

}  // namespace sdnioc
