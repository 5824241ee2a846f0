#pragma once

// Core model types for partially observed linear-quadratic control with
// signal-dependent noise.
//
// Discrete time, 0-based steps t = 0..T-1:
//   x_{t+1} = A_t x_t + B_t u_t + V xi_t + sum_i eps_t^i C_i u_t
//   y_t     = H_t x_t + W om_t + sum_i ueps_t^i D_i x_t
//   xhat_{t+1} = A_t xhat_t + B_t u_t + K_t (y_t - H_t xhat_t) + E eta_t
//   u_t     = -L_t xhat_t
// with xi, om, eta standard normal vectors and eps, ueps standard normal
// scalars, all independent. V, W, E are noise scale factors: the additive
// covariances are V V^T, W W^T, E E^T.
//
// Cost: J = E[ sum_{t=0}^{T-1} x_t^T Q_t x_t + u_t^T R_t u_t ]. The terminal
// control u_{T-1} influences no state, so its optimum is zero; gain schedules
// still carry T slots with the last gain identically zero.

#include <cstdint>
#include <string>
#include <vector>

#include "sdnioc/matrix.hpp"

namespace sdnioc {

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A matrix sequence with either one slot (constant over time) or T slots.
struct MatSeq {
  std::vector<dmat> slots;

  MatSeq() = default;
  MatSeq(dmat constant) : slots{std::move(constant)} {}  // NOLINT(google-explicit-constructor)
  MatSeq(std::vector<dmat> varying) : slots(std::move(varying)) {}  // NOLINT

  bool constant() const { return slots.size() == 1; }
  std::size_t size() const { return slots.size(); }
  const dmat& at(std::size_t t) const { return constant() ? slots[0] : slots.at(t); }
  dmat& at_mut(std::size_t t) { return constant() ? slots[0] : slots.at(t); }

  bool operator==(const MatSeq& other) const {
    if (slots.size() != other.slots.size()) return false;
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (slots[i] != other.slots[i]) return false;
    return true;
  }
};

struct SystemModel {
  std::size_t state_dim = 0;    // m
  std::size_t control_dim = 0;  // p
  std::size_t obs_dim = 0;      // k
  std::size_t horizon = 0;      // T

  MatSeq A;  // m x m
  MatSeq B;  // m x p
  MatSeq H;  // k x m
  dmat V;    // m x m additive process-noise scale
  dmat W;    // k x k additive observation-noise scale
  dmat E;    // m x m internal estimation-noise scale

  std::vector<dmat> C_list;  // control-dependent scales, each m x p
  std::vector<dmat> D_list;  // state-dependent scales, each k x m

  dvec init_state_mean;     // m
  dmat init_state_cov;      // m x m
  dvec init_estimate_mean;  // m
  dmat init_estimate_cov;   // m x m
};

struct CostModel {
  MatSeq Q;  // m x m, PSD
  MatSeq R;  // p x p, PD
};

// Experimenter-side observations o_t = M x_t + N nu_t.
struct ExperimenterModel {
  dmat M;  // s x m
  dmat N;  // s x s noise scale
  std::size_t obs_dim() const { return static_cast<std::size_t>(M.rows()); }
};

struct GainSchedule {
  std::vector<dmat> L;  // T slots, p x m; L[T-1] == 0
  std::vector<dmat> K;  // T slots, m x k; K[T-1] == 0
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> problems;

  void fail(std::string why) {
    ok = false;
    problems.push_back(std::move(why));
  }
};

ValidationReport validate(const SystemModel& model, const CostModel& cost,
                          const ExperimenterModel* exp = nullptr);

// Throws ValidationError listing every problem found.
void validate_or_throw(const SystemModel& model, const CostModel& cost,
                       const ExperimenterModel* exp = nullptr);

// Order-stable FNV-1a hash over dimensions and matrix bytes; identifies a
// (model, cost, experimenter) triple in dataset sidecar files.
uint64_t model_fingerprint(const SystemModel& model, const CostModel& cost,
                           const ExperimenterModel* exp = nullptr);

}  // namespace sdnioc
