#include "sdnioc/model_io.hpp"

#include <fstream>

#include "json.hpp"

namespace sdnioc {
namespace {

using nlohmann::json;

json matrix_to_json(const dmat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const dvec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json seq_to_json(const MatSeq& seq) {
  if (seq.constant()) return matrix_to_json(seq.slots[0]);
  json out = json::array();
  for (const dmat& m : seq.slots) out.push_back(matrix_to_json(m));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw IoError("config field '" + key + "': " + why);
}

dmat matrix_from_json(const json& j, const std::string& key) {
  if (j.is_number()) {
    dmat m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty()) bad(key, "expected a matrix (nested array) or scalar");
  if (!j[0].is_array()) bad(key, "expected nested rows; flat arrays are only vectors");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  dmat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) bad(key, "ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) bad(key, "non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

dvec vector_from_json(const json& j, const std::string& key) {
  if (j.is_number()) {
    dvec v(1);
    v(0) = j.get<double>();
    return v;
  }
  if (!j.is_array() || j.empty()) bad(key, "expected a vector");
  if (j[0].is_array()) {
    // Accept a column or row matrix.
    const dmat m = matrix_from_json(j, key);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    bad(key, "expected a vector, got a matrix");
  }
  dvec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad(key, "non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

MatSeq seq_from_json(const json& j, const std::string& key) {
  if (j.is_number()) return MatSeq(matrix_from_json(j, key));
  if (!j.is_array() || j.empty()) bad(key, "expected a matrix or list of matrices");
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
    std::vector<dmat> slots;
    slots.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
      slots.push_back(matrix_from_json(j[i], key + "[" + std::to_string(i) + "]"));
    return MatSeq(std::move(slots));
  }
  return MatSeq(matrix_from_json(j, key));
}

std::vector<dmat> matrix_list_from_json(const json& j, const std::string& key) {
  std::vector<dmat> out;
  if (j.is_null()) return out;
  if (!j.is_array()) bad(key, "expected a list of matrices");
  if (j.empty()) return out;
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(matrix_from_json(j[i], key + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(matrix_from_json(j, key));
  }
  return out;
}

json spec_to_json(const ParamSpec& spec) {
  json params = json::array();
  for (const ParamEntry& p : spec.params) {
    json bindings = json::array();
    for (const ParamBinding& b : p.bindings) {
      bindings.push_back({{"target", target_to_string(b.target)},
                          {"list", b.list_index},
                          {"time", b.time_index},
                          {"row", b.row},
                          {"col", b.col},
                          {"scale", b.scale},
                          {"power", b.power}});
    }
    params.push_back(
        {{"name", p.name},
         {"transform", p.transform == ParamTransform::Log10 ? "log10" : "identity"},
         {"lo", p.lo},
         {"hi", p.hi},
         {"bindings", std::move(bindings)}});
  }
  return json{{"params", std::move(params)}};
}

ParamSpec spec_from_json(const json& j) {
  ParamSpec spec;
  if (!j.is_object() || !j.contains("params") || !j.at("params").is_array())
    throw IoError("param_spec: expected an object with a 'params' list");
  for (const json& pj : j.at("params")) {
    ParamEntry p;
    p.name = pj.at("name").get<std::string>();
    const std::string tr = pj.value("transform", std::string("log10"));
    if (tr == "log10") p.transform = ParamTransform::Log10;
    else if (tr == "identity") p.transform = ParamTransform::Identity;
    else throw IoError("param_spec: unknown transform '" + tr + "'");
    p.lo = pj.at("lo").get<double>();
    p.hi = pj.at("hi").get<double>();
    if (!pj.contains("bindings") || !pj.at("bindings").is_array() ||
        pj.at("bindings").empty())
      throw IoError("param_spec: parameter '" + p.name + "' has no bindings");
    for (const json& bj : pj.at("bindings")) {
      ParamBinding b;
      b.target = target_from_string(bj.at("target").get<std::string>());
      b.list_index = bj.value("list", 0);
      b.time_index = bj.value("time", -1);
      b.row = bj.value("row", 0);
      b.col = bj.value("col", 0);
      b.scale = bj.value("scale", 1.0);
      b.power = bj.value("power", 1);
      p.bindings.push_back(b);
    }
    spec.params.push_back(std::move(p));
  }
  return spec;
}

}  // namespace

std::string param_spec_to_json_text(const ParamSpec& spec) {
  return spec_to_json(spec).dump(2) + "\n";
}

ParamSpec param_spec_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("param_spec parse error: ") + e.what());
  }
  return spec_from_json(j);
}

std::string config_to_json(const ModelConfig& config) {
  const SystemModel& model = config.model;
  json j;
  j["m"] = model.state_dim;
  j["p"] = model.control_dim;
  j["k"] = model.obs_dim;
  j["T"] = model.horizon;
  j["A"] = seq_to_json(model.A);
  j["B"] = seq_to_json(model.B);
  j["H"] = seq_to_json(model.H);
  j["V"] = matrix_to_json(model.V);
  j["W"] = matrix_to_json(model.W);
  j["E"] = matrix_to_json(model.E);
  json c_list = json::array();
  for (const dmat& c : model.C_list) c_list.push_back(matrix_to_json(c));
  j["C"] = std::move(c_list);
  json d_list = json::array();
  for (const dmat& d : model.D_list) d_list.push_back(matrix_to_json(d));
  j["D"] = std::move(d_list);
  j["x1_mean"] = vector_to_json(model.init_state_mean);
  j["x1_cov"] = matrix_to_json(model.init_state_cov);
  j["xhat1_mean"] = vector_to_json(model.init_estimate_mean);
  j["xhat1_cov"] = matrix_to_json(model.init_estimate_cov);
  j["Q"] = seq_to_json(config.cost.Q);
  j["R"] = seq_to_json(config.cost.R);
  if (config.exp) {
    j["M"] = matrix_to_json(config.exp->M);
    j["N"] = matrix_to_json(config.exp->N);
  }
  if (config.param_spec) j["param_spec"] = spec_to_json(*config.param_spec);
  if (config.theta) {
    // theta entries are keyed by spec parameter names; without a spec the
    // values cannot be written back, so refuse instead of dropping them.
    if (!config.param_spec) throw IoError("config: theta requires param_spec");
    if (config.theta->size() !=
        static_cast<Eigen::Index>(config.param_spec->params.size()))
      throw IoError("config: theta length does not match param_spec");
    json theta;
    for (std::size_t i = 0; i < config.param_spec->params.size(); ++i)
      theta[config.param_spec->params[i].name] = (*config.theta)(i);
    j["theta"] = std::move(theta);
  }
  if (!config.name.empty()) j["name"] = config.name;
  return j.dump(2) + "\n";
}

ModelConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("config parse error: ") + e.what());
  }

  ModelConfig config;
  SystemModel& model = config.model;
  try {
    model.state_dim = j.at("m").get<std::size_t>();
    model.control_dim = j.at("p").get<std::size_t>();
    model.obs_dim = j.at("k").get<std::size_t>();
    model.horizon = j.at("T").get<std::size_t>();
    model.A = seq_from_json(j.at("A"), "A");
    model.B = seq_from_json(j.at("B"), "B");
    model.H = seq_from_json(j.at("H"), "H");
    model.V = matrix_from_json(j.at("V"), "V");
    model.W = matrix_from_json(j.at("W"), "W");
    model.E = matrix_from_json(j.at("E"), "E");
    if (j.contains("C")) model.C_list = matrix_list_from_json(j.at("C"), "C");
    if (j.contains("D")) model.D_list = matrix_list_from_json(j.at("D"), "D");
    model.init_state_mean = vector_from_json(j.at("x1_mean"), "x1_mean");
    model.init_state_cov = matrix_from_json(j.at("x1_cov"), "x1_cov");
    model.init_estimate_mean = vector_from_json(j.at("xhat1_mean"), "xhat1_mean");
    model.init_estimate_cov = matrix_from_json(j.at("xhat1_cov"), "xhat1_cov");
    config.cost.Q = seq_from_json(j.at("Q"), "Q");
    config.cost.R = seq_from_json(j.at("R"), "R");
    if (j.contains("M") != j.contains("N"))
      throw IoError("config: M and N must be given together");
    if (j.contains("M")) {
      ExperimenterModel exp;
      exp.M = matrix_from_json(j.at("M"), "M");
      exp.N = matrix_from_json(j.at("N"), "N");
      config.exp = std::move(exp);
    }
    if (j.contains("param_spec")) config.param_spec = spec_from_json(j.at("param_spec"));
    if (j.contains("theta")) {
      if (!config.param_spec) throw IoError("config: theta requires param_spec");
      const json& tj = j.at("theta");
      dvec theta(config.param_spec->params.size());
      for (std::size_t i = 0; i < config.param_spec->params.size(); ++i) {
        const std::string& name = config.param_spec->params[i].name;
        if (!tj.contains(name)) throw IoError("config: theta missing '" + name + "'");
        theta(i) = tj.at(name).get<double>();
      }
      config.theta = theta;
    }
    config.name = j.value("name", std::string());
  } catch (const json::exception& e) {
    throw IoError(std::string("config field error: ") + e.what());
  }

  // Scalars given where 1x1 matrices are expected arrive as 1x1 already; a
  // full structural/PSD check runs here so every loaded config is usable.
  validate_or_throw(model, config.cost, config.exp ? &*config.exp : nullptr);
  return config;
}

void save_config(const std::string& path, const ModelConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_config: cannot open " + path);
  out << config_to_json(config);
  if (!out) throw IoError("save_config: write failed for " + path);
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace sdnioc
