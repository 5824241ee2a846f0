#include "sdnioc/metrics.hpp"

#include <cmath>

namespace sdnioc {
namespace {

const dmat& field_matrix(const Trajectory& traj, TrajectoryField field) {
  switch (field) {
    case TrajectoryField::State: return traj.states;
    case TrajectoryField::Estimate: return traj.estimates;
    case TrajectoryField::Control: return traj.controls;
    case TrajectoryField::AgentObs: return traj.agent_obs;
    case TrajectoryField::ExpObs: return traj.exp_obs;
  }
  throw std::invalid_argument("unknown trajectory field");
}

}  // namespace

dvec per_param_log_error(const dvec& theta_true, const dvec& theta_hat,
                         double log_base) {
  if (theta_true.size() != theta_hat.size())
    throw std::invalid_argument("per_param_log_error: size mismatch");
  double denom = 1.0;
  if (log_base != kNaturalLogBase) {
    if (log_base <= 0.0 || log_base == 1.0)
      throw std::invalid_argument("per_param_log_error: invalid log base");
    denom = std::log(log_base);
  }
  dvec out(theta_true.size());
  for (Eigen::Index i = 0; i < theta_true.size(); ++i) {
    if (theta_true(i) <= 0.0 || theta_hat(i) <= 0.0)
      throw std::invalid_argument("per_param_log_error: values must be positive");
    out(i) = (std::log(theta_hat(i)) - std::log(theta_true(i))) / denom;
  }
  return out;
}

double log_rmse(const dvec& theta_true, const dvec& theta_hat, double log_base) {
  const dvec err = per_param_log_error(theta_true, theta_hat, log_base);
  return std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
}

std::vector<GaussianBelief> empirical_moments(const TrajectoryDataset& data,
                                              TrajectoryField field,
                                              const std::vector<int>& dims) {
  const std::size_t n = data.trials.size();
  if (n < 2)
    throw std::invalid_argument("empirical_moments: need at least two trials");

  const dmat& first = field_matrix(data.trials[0], field);
  const Eigen::Index T = first.rows();
  const Eigen::Index full_dim = first.cols();
  if (T == 0 || full_dim == 0)
    throw std::invalid_argument("empirical_moments: field is empty");

  std::vector<int> sel = dims;
  if (sel.empty())
    for (Eigen::Index j = 0; j < full_dim; ++j) sel.push_back(static_cast<int>(j));
  for (int j : sel)
    if (j < 0 || j >= full_dim)
      throw std::invalid_argument("empirical_moments: dim index out of range");
  const Eigen::Index d = static_cast<Eigen::Index>(sel.size());

  std::vector<GaussianBelief> out(T);
  dmat samples(n, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const dmat& mat = field_matrix(data.trials[i], field);
      if (mat.rows() != T || mat.cols() != full_dim)
        throw std::invalid_argument("empirical_moments: ragged dataset");
      for (Eigen::Index j = 0; j < d; ++j) samples(i, j) = mat(t, sel[j]);
    }
    const dvec mean = samples.colwise().mean().transpose();
    dmat centered = samples.rowwise() - mean.transpose();
    dmat cov = centered.transpose() * centered / static_cast<double>(n - 1);
    out[t] = {mean, symmetrized(cov)};
  }
  return out;
}

std::vector<GaussianBelief> select_dims(const std::vector<GaussianBelief>& beliefs,
                                        const std::vector<int>& dims) {
  if (dims.empty()) return beliefs;
  std::vector<GaussianBelief> out;
  out.reserve(beliefs.size());
  for (const GaussianBelief& b : beliefs) {
    const Eigen::Index d = static_cast<Eigen::Index>(dims.size());
    GaussianBelief sel;
    sel.mean.resize(d);
    sel.cov.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      sel.mean(i) = b.mean(dims[i]);
      for (Eigen::Index j = 0; j < d; ++j) sel.cov(i, j) = b.cov(dims[i], dims[j]);
    }
    out.push_back(std::move(sel));
  }
  return out;
}

// KL(p || q) = 0.5 [ logdet(Sq)/det(Sp) - d + (mp-mq)^T Sq^{-1} (mp-mq)
//                    + tr(Sq^{-1} Sp) ]
double kl_gaussian(const GaussianBelief& p, const GaussianBelief& q, double jitter) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  const double d = static_cast<double>(p.dim());
  SpdChol fp = spd_factor(p.cov, jitter, "kl p-covariance");
  SpdChol fq = spd_factor(q.cov, jitter, "kl q-covariance");
  const dvec dm = p.mean - q.mean;
  const double quad = dm.dot(fq.solve(dm));
  const double tr = fq.solve(p.cov).trace();
  return 0.5 * (fq.log_det - fp.log_det - d + quad + tr);
}

double symmetrized_kl(const GaussianBelief& p, const GaussianBelief& q, double jitter) {
  return 0.5 * (kl_gaussian(p, q, jitter) + kl_gaussian(q, p, jitter));
}

double mean_skl_over_time(const std::vector<GaussianBelief>& a,
                          const std::vector<GaussianBelief>& b, double jitter) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("mean_skl_over_time: sequences must align");
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) sum += symmetrized_kl(a[t], b[t], jitter);
  return sum / static_cast<double>(a.size());
}

SlopeFit fit_convergence_rate(const std::vector<double>& n,
                              const std::vector<double>& err) {
  if (n.size() != err.size() || n.size() < 2)
    throw std::invalid_argument("fit_convergence_rate: need >= 2 aligned points");
  const std::size_t count = n.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (n[i] <= 0 || err[i] <= 0)
      throw std::invalid_argument("fit_convergence_rate: values must be positive");
    mx += std::log10(n[i]);
    my += std::log10(err[i]);
  }
  mx /= static_cast<double>(count);
  my /= static_cast<double>(count);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = std::log10(n[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log10(err[i]) - my);
  }
  if (sxx <= 0)
    throw std::invalid_argument("fit_convergence_rate: need >= 2 distinct n");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace sdnioc
