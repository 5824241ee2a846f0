#pragma once

// Trajectory simulation under the closed loop (controller + filter).

#include <cstdint>
#include <vector>

#include "sdnioc/model.hpp"

namespace sdnioc {

struct Trajectory {
  dmat states;       // T x m
  dmat estimates;    // T x m
  dmat controls;     // (T-1) x p
  dmat agent_obs;    // T x k
  dmat exp_obs;      // T x s, or 0x0 when no experimenter model was given
  uint64_t seed = 0;  // the seed this trial was drawn with
};

struct TrajectoryDataset {
  std::vector<Trajectory> trials;
  uint64_t seed = 0;
  uint64_t fingerprint = 0;  // model_fingerprint of the generator

  std::size_t size() const { return trials.size(); }
};

// Noise draw order per trial is fixed (documented in simulate.cpp) and
// experimenter-observation noise comes from a separate substream, so the
// state sequence is identical with and without an experimenter model.
Trajectory rollout(const SystemModel& model, const GainSchedule& gains, uint64_t seed,
                   const ExperimenterModel* exp = nullptr);

// Trial i uses the substream (seed, i); results are independent of n_threads.
TrajectoryDataset rollout_batch(const SystemModel& model, const GainSchedule& gains,
                                std::size_t n_trials, uint64_t seed,
                                const ExperimenterModel* exp = nullptr,
                                int n_threads = 0);

}  // namespace sdnioc
