#pragma once

// Evaluation metrics: parameter-recovery error in log space, empirical
// moment summaries of trajectory datasets, Gaussian KL divergences, and the
// convergence-rate slope of recovery error against dataset size.

#include <vector>

#include "sdnioc/likelihood.hpp"
#include "sdnioc/simulate.hpp"

namespace sdnioc {

// log_base selects the logarithm used by the recovery-error metrics.
// 0 means natural log (the default); any other value must be > 0 and != 1.
constexpr double kNaturalLogBase = 0.0;

// Elementwise log(theta_hat) - log(theta_true) in the chosen base.
// Requires positive values.
dvec per_param_log_error(const dvec& theta_true, const dvec& theta_hat,
                         double log_base = kNaturalLogBase);

// Root mean square of per_param_log_error.
double log_rmse(const dvec& theta_true, const dvec& theta_hat,
                double log_base = kNaturalLogBase);

enum class TrajectoryField { State, Estimate, Control, AgentObs, ExpObs };

// Per-timestep sample mean and (unbiased) covariance across trials. `dims`
// selects components; empty selects all. Requires at least two trials.
std::vector<GaussianBelief> empirical_moments(const TrajectoryDataset& data,
                                              TrajectoryField field,
                                              const std::vector<int>& dims = {});

// Selects the same components from analytic per-step beliefs.
std::vector<GaussianBelief> select_dims(const std::vector<GaussianBelief>& beliefs,
                                        const std::vector<int>& dims);

double kl_gaussian(const GaussianBelief& p, const GaussianBelief& q, double jitter = 1e-9);
double symmetrized_kl(const GaussianBelief& p, const GaussianBelief& q,
                      double jitter = 1e-9);

// Mean symmetrized KL over aligned per-step belief sequences.
double mean_skl_over_time(const std::vector<GaussianBelief>& a,
                          const std::vector<GaussianBelief>& b, double jitter = 1e-9);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares slope of log10(err) against log10(n). Requires at least two
// distinct n values; err must be positive.
SlopeFit fit_convergence_rate(const std::vector<double>& n, const std::vector<double>& err);

}  // namespace sdnioc
