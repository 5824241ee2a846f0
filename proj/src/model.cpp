#include "sdnioc/model.hpp"

#include <cstring>
#include <sstream>

namespace sdnioc {
namespace {

constexpr double kPsdTol = 1e-10;

void check_seq(ValidationReport& rep, const MatSeq& seq, const char* name,
               std::size_t rows, std::size_t cols, std::size_t horizon) {
  if (seq.slots.empty()) {
    rep.fail(std::string(name) + ": empty sequence");
    return;
  }
  if (seq.slots.size() != 1 && seq.slots.size() != horizon) {
    std::ostringstream os;
    os << name << ": sequence has " << seq.slots.size() << " slots, expected 1 or "
       << horizon;
    rep.fail(os.str());
  }
  for (std::size_t i = 0; i < seq.slots.size(); ++i) {
    const dmat& m = seq.slots[i];
    if (static_cast<std::size_t>(m.rows()) != rows ||
        static_cast<std::size_t>(m.cols()) != cols) {
      std::ostringstream os;
      os << name << "[" << i << "]: is " << m.rows() << "x" << m.cols()
         << ", expected " << rows << "x" << cols;
      rep.fail(os.str());
    }
    if (!m.allFinite()) rep.fail(std::string(name) + ": non-finite entries");
  }
}

void check_mat(ValidationReport& rep, const dmat& m, const char* name,
               std::size_t rows, std::size_t cols) {
  if (static_cast<std::size_t>(m.rows()) != rows ||
      static_cast<std::size_t>(m.cols()) != cols) {
    std::ostringstream os;
    os << name << ": is " << m.rows() << "x" << m.cols() << ", expected " << rows
       << "x" << cols;
    rep.fail(os.str());
  }
  if (!m.allFinite()) rep.fail(std::string(name) + ": non-finite entries");
}

void check_psd(ValidationReport& rep, const dmat& m, const char* name) {
  if (m.rows() != m.cols()) return;  // dimension failure already recorded
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
    rep.fail(std::string(name) + ": not symmetric");
    return;
  }
  if (min_eigenvalue_sym(m) < -kPsdTol)
    rep.fail(std::string(name) + ": not positive semidefinite");
}

void hash_bytes(uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_u64(uint64_t& h, uint64_t v) { hash_bytes(h, &v, sizeof v); }

void hash_mat(uint64_t& h, const dmat& m) {
  hash_u64(h, static_cast<uint64_t>(m.rows()));
  hash_u64(h, static_cast<uint64_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      hash_bytes(h, &v, sizeof v);
    }
}

void hash_seq(uint64_t& h, const MatSeq& seq) {
  hash_u64(h, seq.slots.size());
  for (const dmat& m : seq.slots) hash_mat(h, m);
}

}  // namespace

ValidationReport validate(const SystemModel& model, const CostModel& cost,
                          const ExperimenterModel* exp) {
  ValidationReport rep;
  const std::size_t m = model.state_dim, p = model.control_dim, k = model.obs_dim,
                    T = model.horizon;
  if (m == 0) rep.fail("state_dim must be positive");
  if (p == 0) rep.fail("control_dim must be positive");
  if (k == 0) rep.fail("obs_dim must be positive");
  if (T == 0) rep.fail("horizon must be positive");
  if (!rep.ok) return rep;

  check_seq(rep, model.A, "A", m, m, T);
  check_seq(rep, model.B, "B", m, p, T);
  check_seq(rep, model.H, "H", k, m, T);
  check_mat(rep, model.V, "V", m, m);
  check_mat(rep, model.W, "W", k, k);
  check_mat(rep, model.E, "E", m, m);
  for (std::size_t i = 0; i < model.C_list.size(); ++i)
    check_mat(rep, model.C_list[i], ("C[" + std::to_string(i) + "]").c_str(), m, p);
  for (std::size_t i = 0; i < model.D_list.size(); ++i)
    check_mat(rep, model.D_list[i], ("D[" + std::to_string(i) + "]").c_str(), k, m);

  if (static_cast<std::size_t>(model.init_state_mean.size()) != m)
    rep.fail("x1_mean: wrong size");
  if (static_cast<std::size_t>(model.init_estimate_mean.size()) != m)
    rep.fail("xhat1_mean: wrong size");
  check_mat(rep, model.init_state_cov, "x1_cov", m, m);
  check_mat(rep, model.init_estimate_cov, "xhat1_cov", m, m);
  if (!model.init_state_mean.allFinite() || !model.init_estimate_mean.allFinite())
    rep.fail("initial means: non-finite entries");
  if (rep.ok) {
    check_psd(rep, model.init_state_cov, "x1_cov");
    check_psd(rep, model.init_estimate_cov, "xhat1_cov");
  }

  check_seq(rep, cost.Q, "Q", m, m, T);
  check_seq(rep, cost.R, "R", p, p, T);
  if (rep.ok) {
    for (std::size_t i = 0; i < cost.Q.slots.size(); ++i)
      check_psd(rep, cost.Q.slots[i], ("Q[" + std::to_string(i) + "]").c_str());
    for (std::size_t i = 0; i < cost.R.slots.size(); ++i) {
      const dmat& r = cost.R.slots[i];
      check_psd(rep, r, ("R[" + std::to_string(i) + "]").c_str());
      if (r.rows() == r.cols() && min_eigenvalue_sym(r) <= 0.0)
        rep.fail("R[" + std::to_string(i) + "]: must be positive definite");
    }
  }

  if (exp != nullptr) {
    const std::size_t s = exp->obs_dim();
    if (s == 0) rep.fail("M: must have at least one row");
    if (static_cast<std::size_t>(exp->M.cols()) != m) rep.fail("M: wrong column count");
    check_mat(rep, exp->N, "N", s, s);
  }
  return rep;
}

void validate_or_throw(const SystemModel& model, const CostModel& cost,
                       const ExperimenterModel* exp) {
  ValidationReport rep = validate(model, cost, exp);
  if (rep.ok) return;
  std::string msg = "invalid model:";
  for (const auto& p : rep.problems) msg += "\n  - " + p;
  throw ValidationError(msg);
}

uint64_t model_fingerprint(const SystemModel& model, const CostModel& cost,
                           const ExperimenterModel* exp) {
  uint64_t h = 0xcbf29ce484222325ULL;
  hash_u64(h, model.state_dim);
  hash_u64(h, model.control_dim);
  hash_u64(h, model.obs_dim);
  hash_u64(h, model.horizon);
  hash_seq(h, model.A);
  hash_seq(h, model.B);
  hash_seq(h, model.H);
  hash_mat(h, model.V);
  hash_mat(h, model.W);
  hash_mat(h, model.E);
  hash_u64(h, model.C_list.size());
  for (const dmat& c : model.C_list) hash_mat(h, c);
  hash_u64(h, model.D_list.size());
  for (const dmat& d : model.D_list) hash_mat(h, d);
  hash_mat(h, model.init_state_mean);
  hash_mat(h, model.init_state_cov);
  hash_mat(h, model.init_estimate_mean);
  hash_mat(h, model.init_estimate_cov);
  hash_seq(h, cost.Q);
  hash_seq(h, cost.R);
  hash_u64(h, exp != nullptr ? 1 : 0);
  if (exp != nullptr) {
    hash_mat(h, exp->M);
    hash_mat(h, exp->N);
  }
  return h;
}

}  // namespace sdnioc
