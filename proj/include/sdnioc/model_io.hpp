#pragma once

// JSON model-config IO.
//
// Schema (all matrices as nested arrays of numbers; a scalar where a matrix
// is expected is promoted to 1x1; a single matrix for A/B/H/Q/R applies to
// every timestep, a list of T matrices gives one per step):
//   {
//     "m", "p", "k", "T",
//     "A", "B", "H", "V", "W", "E",
//     "C": [..], "D": [..],                  // optional, default empty
//     "x1_mean", "x1_cov", "xhat1_mean", "xhat1_cov",
//     "Q", "R",
//     "M", "N",                              // optional, experimenter model
//     "param_spec", "theta", "name"          // optional, written by `problem`
//   }

#include <optional>
#include <string>

#include "sdnioc/estimate.hpp"
#include "sdnioc/model.hpp"

namespace sdnioc {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelConfig {
  SystemModel model;
  CostModel cost;
  std::optional<ExperimenterModel> exp;
  std::optional<ParamSpec> param_spec;
  std::optional<dvec> theta;  // parameter values the config was built with
  std::string name;
};

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

// Standalone parameter-spec serialization (same schema as the config's
// "param_spec" field), for fit outputs and --spec override files.
std::string param_spec_to_json_text(const ParamSpec& spec);
ParamSpec param_spec_from_json_text(const std::string& text);

void save_config(const std::string& path, const ModelConfig& config);
ModelConfig load_config(const std::string& path);

}  // namespace sdnioc
