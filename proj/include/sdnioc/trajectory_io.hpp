#pragma once

// Trajectory dataset CSV IO.
//
// CSV schema: header `trial,t,kind,c0,...,c{n-1}` with n = widest row kind;
// kind in {state, estimate, control, agent_obs, exp_obs}; shorter kinds leave
// trailing cells empty. Values are printed with %.17g (round-trip exact).
// A sidecar `<path>.meta.json` records the generator fingerprint and seed.

#include <string>

#include "sdnioc/model.hpp"
#include "sdnioc/simulate.hpp"

namespace sdnioc {

void save_dataset(const std::string& csv_path, const TrajectoryDataset& data);

TrajectoryDataset load_dataset(const std::string& csv_path);

// Throws IoError when the dataset's recorded fingerprint differs from the
// model's (use after load when a model config is also in hand).
void check_dataset_matches(const TrajectoryDataset& data, const SystemModel& model,
                           const CostModel& cost, const ExperimenterModel* exp = nullptr);

}  // namespace sdnioc
