#include "sdnioc/dfo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdnioc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isnan(v) ? kInf : v; }

struct Quadratic {
  double c = 0.0;
  dvec g;
  dmat G;

  double value(const dvec& d) const { return c + g.dot(d) + 0.5 * d.dot(G * d); }
  dvec grad(const dvec& d) const { return g + G * d; }
};

// Weighted ridge least-squares fit of a full quadratic to (d_j, f_j) pairs in
// scaled displacement coordinates. Points far from the center get lower
// weight; non-finite values are clamped by the caller.
Quadratic fit_quadratic(const std::vector<dvec>& disp, const std::vector<double>& fval) {
  const Eigen::Index n = disp[0].size();
  const Eigen::Index q = 1 + n + n * (n + 1) / 2;
  const Eigen::Index rows = static_cast<Eigen::Index>(disp.size());

  dmat phi(rows, q);
  dvec rhs(rows);
  dvec w(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const dvec& d = disp[r];
    Eigen::Index col = 0;
    phi(r, col++) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) phi(r, col++) = d(i);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        phi(r, col++) = (i == j ? 0.5 : 1.0) * d(i) * d(j);
    rhs(r) = fval[r];
    w(r) = 1.0 / (1.0 + d.squaredNorm());
  }

  const dmat phw = w.asDiagonal() * phi;
  dmat normal = phi.transpose() * phw;
  const double ridge = 1e-10 * std::max(1.0, normal.diagonal().maxCoeff());
  normal.diagonal().array() += ridge;
  const dvec theta = normal.ldlt().solve(phi.transpose() * (w.asDiagonal() * rhs));

  Quadratic model;
  Eigen::Index col = 0;
  model.c = theta(col++);
  model.g.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) model.g(i) = theta(col++);
  model.G = dmat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      model.G(i, j) = theta(col);
      model.G(j, i) = theta(col);
      ++col;
    }
  return model;
}

// Projection onto box intersected (approximately) with the unit ball: clip to
// the box, then scale toward the origin if outside the ball. The origin is
// feasible, so scaling stays inside the box.
dvec project(dvec d, const dvec& lb, const dvec& ub) {
  d = d.cwiseMax(lb).cwiseMin(ub);
  const double norm = d.norm();
  if (norm > 1.0) d *= 1.0 / norm;
  return d;
}

// Approximate trust-region subproblem solve in scaled coordinates (radius 1).
dvec solve_tr(const Quadratic& model, const dvec& lb, const dvec& ub) {
  const Eigen::Index n = model.g.size();
  dvec best = dvec::Zero(n);
  double best_val = model.value(best);

  auto consider = [&](const dvec& cand) {
    const double v = model.value(cand);
    if (v < best_val) {
      best_val = v;
      best = cand;
    }
  };

  const double gnorm = model.g.norm();
  if (gnorm > 0) {
    // Cauchy-style line search along the projected steepest descent path.
    double alpha = 1.0 / gnorm;
    const double curv = model.g.dot(model.G * model.g) / (gnorm * gnorm);
    if (curv > 0) alpha = std::min(alpha, gnorm / curv / gnorm);
    for (int i = 0; i < 30; ++i) {
      consider(project(-alpha * model.g, lb, ub));
      alpha *= 0.5;
    }
    alpha = 1.0 / gnorm;
    for (int i = 0; i < 8; ++i) {
      alpha *= 2.0;
      consider(project(-alpha * model.g, lb, ub));
    }
  }

  // Shifted-Newton candidate.
  Eigen::SelfAdjointEigenSolver<dmat> es(model.G);
  const double lam_min = es.eigenvalues().minCoeff();
  const double shift = lam_min <= 0 ? -lam_min + 1e-8 * (1.0 + model.G.norm()) : 0.0;
  dmat Gs = model.G;
  Gs.diagonal().array() += shift;
  consider(project(Gs.ldlt().solve(-model.g), lb, ub));

  // Projected-gradient refinement from the incumbent.
  dvec d = best;
  dvec prev_d = d;
  dvec prev_grad = model.grad(d);
  double step = 1.0 / (1.0 + model.G.norm());
  for (int it = 0; it < 80; ++it) {
    const dvec grad = model.grad(d);
    if (it > 0) {
      const dvec sd = d - prev_d;
      const dvec yd = grad - prev_grad;
      const double sy = sd.dot(yd);
      if (sy > 1e-16) step = std::min(1e8, std::max(1e-10, sd.squaredNorm() / sy));
    }
    prev_d = d;
    prev_grad = grad;
    d = project(d - step * grad, lb, ub);
    consider(d);
    if ((d - prev_d).norm() < 1e-14) break;
  }
  return best;
}

}  // namespace

DfoResult minimize_dfo(const std::function<double(const dvec&)>& f, const dvec& x0,
                       const dvec& lo, const dvec& hi, const DfoOptions& opts) {
  const Eigen::Index n = x0.size();
  if (n == 0) throw std::invalid_argument("minimize_dfo: empty problem");
  if (lo.size() != n || hi.size() != n)
    throw std::invalid_argument("minimize_dfo: bound size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lo(i) <= hi(i))) throw std::invalid_argument("minimize_dfo: empty box");
    if (x0(i) < lo(i) || x0(i) > hi(i))
      throw std::invalid_argument("minimize_dfo: infeasible start");
  }
  if (opts.max_evals < static_cast<int>(n) + 2)
    throw std::invalid_argument("minimize_dfo: budget must be at least dim + 2");

  const double max_width = (hi - lo).maxCoeff();
  const double min_width_pos = [&] {
    double w = max_width;
    for (Eigen::Index i = 0; i < n; ++i)
      if (hi(i) > lo(i)) w = std::min(w, hi(i) - lo(i));
    return w;
  }();
  double delta = opts.rho_begin > 0 ? opts.rho_begin : 0.25 * min_width_pos;
  delta = std::max(delta, opts.rho_end);
  const double delta_max = std::max(max_width, delta);

  const std::size_t full_quadratic = static_cast<std::size_t>(1 + n + n * (n + 1) / 2);
  std::size_t capacity = full_quadratic;
  if (opts.max_points > 0)
    capacity = std::max<std::size_t>(static_cast<std::size_t>(opts.max_points),
                                     static_cast<std::size_t>(n) + 2);

  std::vector<dvec> pts;
  std::vector<double> vals;
  int evals = 0;

  auto evaluate = [&](const dvec& x) {
    const double v = sanitize(f(x));
    ++evals;
    pts.push_back(x);
    vals.push_back(v);
    return v;
  };

  std::size_t best = 0;
  auto refresh_best = [&] {
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (vals[i] < vals[best]) best = i;
  };

  auto drop_farthest = [&] {
    if (pts.size() <= capacity) return;
    std::size_t worst = pts.size();
    double worst_dist = -1.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {  // never drop the newest
      if (i == best) continue;
      const double dist = (pts[i] - pts[best]).norm();
      if (dist > worst_dist) {
        worst_dist = dist;
        worst = i;
      }
    }
    if (worst < pts.size()) {
      pts.erase(pts.begin() + static_cast<long>(worst));
      vals.erase(vals.begin() + static_cast<long>(worst));
      best = 0;
      refresh_best();
    }
  };

  evaluate(x0);
  for (Eigen::Index i = 0; i < n && evals < opts.max_evals; ++i) {
    if (hi(i) <= lo(i)) continue;
    dvec x = pts[0];
    const double room_up = hi(i) - x(i);
    const double room_dn = x(i) - lo(i);
    const double step = std::min(delta, std::max(room_up, room_dn));
    x(i) += room_up >= room_dn ? step : -step;
    evaluate(x);
  }
  refresh_best();

  DfoResult out;
  int geom_cycle = 0;

  while (evals < opts.max_evals) {
    // Fit the model in coordinates scaled by the current radius.
    double cap = vals[best];
    double spread = 0.0;
    for (double v : vals)
      if (std::isfinite(v)) spread = std::max(spread, v - vals[best]);
    cap = vals[best] + 1e6 * (1.0 + std::abs(vals[best]) + spread);

    std::vector<dvec> disp;
    std::vector<double> fv;
    disp.reserve(pts.size());
    fv.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      disp.push_back((pts[i] - pts[best]) / delta);
      fv.push_back(std::min(vals[i], cap));
    }
    const Quadratic model = fit_quadratic(disp, fv);

    const dvec lb = (lo - pts[best]) / delta;
    const dvec ub = (hi - pts[best]) / delta;
    const dvec d = solve_tr(model, lb, ub);
    const double pred = model.value(dvec::Zero(n)) - model.value(d);

    const bool stationary =
        d.norm() < 1e-3 || pred <= 1e-12 * (1.0 + std::abs(vals[best]));
    if (stationary) {
      if (delta <= opts.rho_end) {
        out.converged = true;
        break;
      }
      if (evals < opts.max_evals) {
        // Geometry refresh before shrinking: probe one coordinate direction.
        Eigen::Index axis = geom_cycle % n;
        ++geom_cycle;
        if (hi(axis) > lo(axis)) {
          dvec x = pts[best];
          const double room_up = hi(axis) - x(axis);
          const double room_dn = x(axis) - lo(axis);
          const double step = std::min(delta, std::max(room_up, room_dn));
          x(axis) += room_up >= room_dn ? step : -step;
          evaluate(x);
          refresh_best();
          drop_farthest();
        }
      }
      delta = std::max(0.5 * delta, 0.5 * opts.rho_end);
      continue;
    }

    dvec x_new = (pts[best] + delta * d).cwiseMax(lo).cwiseMin(hi);
    const double f_before = vals[best];
    const double f_new = evaluate(x_new);
    refresh_best();
    drop_farthest();

    const double ratio = (f_before - f_new) / pred;
    if (ratio >= 0.7)
      delta = std::min(2.0 * delta, delta_max);
    else if (ratio < 0.01)
      delta *= 0.5;
    if (delta <= opts.rho_end) {
      out.converged = true;
      break;
    }
  }

  refresh_best();
  out.x = pts[best];
  out.f = vals[best];
  out.evals = evals;
  return out;
}

}  // namespace sdnioc
