#pragma once

// Small dense-matrix helpers shared across the library: symmetrization,
// PSD checks, and Cholesky factorization with the jitter fallback policies
// used by the solver and the likelihood code.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace sdnioc {

using dmat = Eigen::MatrixXd;
using dvec = Eigen::VectorXd;

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline dmat symmetrized(const dmat& m) { return 0.5 * (m + m.transpose()); }

inline void symmetrize_in_place(dmat& m) { m = symmetrized(m); }

// Smallest eigenvalue of the symmetric part of m.
inline double min_eigenvalue_sym(const dmat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<dmat> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// PSD test used by validation: eigenvalues of the symmetrized matrix may dip
// to -tol before the matrix is rejected.
inline bool is_psd(const dmat& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  return min_eigenvalue_sym(m) >= -tol;
}

// Symmetric square root with eigenvalue clamping; accepts slightly indefinite
// inputs (negative eigenvalues are treated as zero). Used for sampling.
inline dmat psd_sqrt(const dmat& m) {
  Eigen::SelfAdjointEigenSolver<dmat> es(symmetrized(m));
  dvec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Cholesky factor of an SPD matrix, with one jitter retry. The jitter is
// scaled by the mean diagonal (trace/n), floored at 1 so that exact point
// masses (zero trace) still factor.
struct SpdChol {
  Eigen::LLT<dmat> llt;
  double log_det = 0.0;
  bool jittered = false;

  dvec solve(const dvec& b) const { return llt.solve(b); }
  dmat solve(const dmat& b) const { return llt.solve(b); }
};

inline SpdChol spd_factor(const dmat& m, double rel_jitter = 1e-9,
                          const char* context = "matrix") {
  SpdChol out;
  dmat sym = symmetrized(m);
  out.llt.compute(sym);
  if (out.llt.info() != Eigen::Success) {
    const double n = static_cast<double>(sym.rows());
    const double scale = std::max(sym.trace() / std::max(n, 1.0), 1.0);
    sym.diagonal().array() += rel_jitter * scale;
    out.llt.compute(sym);
    out.jittered = true;
    if (out.llt.info() != Eigen::Success) {
      throw NumericalError(std::string(context) +
                           ": matrix not positive definite after jitter retry");
    }
  }
  out.log_det = 2.0 * out.llt.matrixLLT().diagonal().array().log().sum();
  return out;
}

// SPD solve with the solver-side fallback policy: absolute jitter, one retry.
inline dmat spd_solve(const dmat& s, const dmat& rhs, double abs_jitter = 1e-12,
                      const char* context = "linear solve") {
  Eigen::LLT<dmat> llt(symmetrized(s));
  if (llt.info() != Eigen::Success) {
    dmat bumped = symmetrized(s);
    bumped.diagonal().array() += abs_jitter;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(std::string(context) +
                           ": matrix not positive definite after jitter retry");
    }
  }
  return llt.solve(rhs);
}

inline constexpr double kLogTwoPi = 1.8378770664093454836;

// Log-density of N(mean, cov) at x. cov is factored with the jitter policy.
inline double gaussian_logpdf(const dvec& x, const dvec& mean, const dmat& cov,
                              double rel_jitter = 1e-9,
                              const char* context = "gaussian_logpdf") {
  SpdChol f = spd_factor(cov, rel_jitter, context);
  dvec r = x - mean;
  double quad = r.dot(f.solve(r));
  return -0.5 * (quad + f.log_det + static_cast<double>(x.size()) * kLogTwoPi);
}

inline bool all_finite(const dmat& m) { return m.allFinite(); }

}  // namespace sdnioc
