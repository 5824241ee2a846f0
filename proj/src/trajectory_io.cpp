#include "sdnioc/trajectory_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdnioc/model_io.hpp"

namespace sdnioc {
namespace {

using nlohmann::json;

const char* kKinds[] = {"state", "estimate", "control", "agent_obs", "exp_obs"};

void append_value(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, ",%.17g", v);
  line += buf;
}

void write_rows(std::string& out, std::size_t trial, const dmat& mat, const char* kind,
                Eigen::Index n_cols) {
  for (Eigen::Index t = 0; t < mat.rows(); ++t) {
    std::string line = std::to_string(trial);
    line += ',';
    line += std::to_string(t);
    line += ',';
    line += kind;
    for (Eigen::Index j = 0; j < mat.cols(); ++j) append_value(line, mat(t, j));
    for (Eigen::Index j = mat.cols(); j < n_cols; ++j) line += ',';
    line += '\n';
    out += line;
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void save_dataset(const std::string& csv_path, const TrajectoryDataset& data) {
  if (data.trials.empty()) throw IoError("save_dataset: empty dataset");

  const Trajectory& t0 = data.trials[0];
  // T comes from whichever kinds are present; withheld kinds have no rows.
  Eigen::Index T = std::max({t0.states.rows(), t0.estimates.rows(), t0.agent_obs.rows(),
                             t0.exp_obs.rows()});
  if (t0.controls.rows() > 0) T = std::max(T, t0.controls.rows() + 1);
  const Eigen::Index m = t0.states.cols();
  const Eigen::Index p = t0.controls.cols();
  const Eigen::Index k = t0.agent_obs.cols();
  const Eigen::Index s = t0.exp_obs.cols();
  const Eigen::Index n_cols = std::max({m, p, k, s});
  if (T == 0 || n_cols == 0) throw IoError("save_dataset: no rows to write");

  std::string out = "trial,t,kind";
  for (Eigen::Index j = 0; j < n_cols; ++j) {
    out += ",c";
    out += std::to_string(j);
  }
  out += '\n';

  for (std::size_t i = 0; i < data.trials.size(); ++i) {
    const Trajectory& traj = data.trials[i];
    write_rows(out, i, traj.states, "state", n_cols);
    write_rows(out, i, traj.estimates, "estimate", n_cols);
    write_rows(out, i, traj.controls, "control", n_cols);
    write_rows(out, i, traj.agent_obs, "agent_obs", n_cols);
    if (traj.exp_obs.size() > 0) write_rows(out, i, traj.exp_obs, "exp_obs", n_cols);
  }

  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("save_dataset: cannot open " + csv_path);
  csv << out;
  csv.close();
  if (!csv) throw IoError("save_dataset: write failed for " + csv_path);

  json meta;
  meta["fingerprint"] = std::to_string(data.fingerprint);
  meta["seed"] = std::to_string(data.seed);
  meta["n_trials"] = data.trials.size();
  meta["T"] = T;
  meta["dims"] = {{"m", m}, {"p", p}, {"k", k}, {"s", s}};
  std::ofstream mf(csv_path + ".meta.json", std::ios::binary);
  if (!mf) throw IoError("save_dataset: cannot open sidecar for " + csv_path);
  mf << meta.dump(2) << '\n';
}

TrajectoryDataset load_dataset(const std::string& csv_path) {
  std::ifstream mf(csv_path + ".meta.json");
  if (!mf) throw IoError("load_dataset: missing sidecar " + csv_path + ".meta.json");
  json meta;
  try {
    mf >> meta;
  } catch (const json::exception& e) {
    throw IoError(std::string("load_dataset: bad sidecar: ") + e.what());
  }

  TrajectoryDataset data;
  try {
    data.fingerprint = std::stoull(meta.at("fingerprint").get<std::string>());
    data.seed = std::stoull(meta.at("seed").get<std::string>());
    const std::size_t n_trials = meta.at("n_trials").get<std::size_t>();
    const Eigen::Index T = meta.at("T").get<Eigen::Index>();
    const auto& dims = meta.at("dims");
    const Eigen::Index m = dims.at("m").get<Eigen::Index>();
    const Eigen::Index p = dims.at("p").get<Eigen::Index>();
    const Eigen::Index k = dims.at("k").get<Eigen::Index>();
    const Eigen::Index s = dims.at("s").get<Eigen::Index>();

    data.trials.resize(n_trials);
    for (Trajectory& traj : data.trials) {
      // Kinds with zero recorded width were withheld from the file.
      if (m > 0) {
        traj.states = dmat::Zero(T, m);
        traj.estimates = dmat::Zero(T, m);
      }
      if (p > 0) traj.controls = dmat::Zero(T > 0 ? T - 1 : 0, p);
      if (k > 0) traj.agent_obs = dmat::Zero(T, k);
      if (s > 0) traj.exp_obs = dmat::Zero(T, s);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("load_dataset: bad sidecar fields: ") + e.what());
  }

  std::ifstream csv(csv_path);
  if (!csv) throw IoError("load_dataset: cannot open " + csv_path);
  std::string line;
  if (!std::getline(csv, line)) throw IoError("load_dataset: empty file " + csv_path);

  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() < 4)
      throw IoError("load_dataset: short row at line " + std::to_string(line_no));
    const std::size_t trial = std::stoul(cells[0]);
    const Eigen::Index t = static_cast<Eigen::Index>(std::stol(cells[1]));
    const std::string& kind = cells[2];
    if (trial >= data.trials.size())
      throw IoError("load_dataset: trial out of range at line " + std::to_string(line_no));
    Trajectory& traj = data.trials[trial];

    dmat* target = nullptr;
    if (kind == kKinds[0]) target = &traj.states;
    else if (kind == kKinds[1]) target = &traj.estimates;
    else if (kind == kKinds[2]) target = &traj.controls;
    else if (kind == kKinds[3]) target = &traj.agent_obs;
    else if (kind == kKinds[4]) target = &traj.exp_obs;
    else throw IoError("load_dataset: unknown kind '" + kind + "' at line " +
                       std::to_string(line_no));
    if (t < 0 || t >= target->rows())
      throw IoError("load_dataset: t out of range at line " + std::to_string(line_no));
    for (Eigen::Index j = 0; j < target->cols(); ++j) {
      const std::string& cell = cells.at(3 + j);
      if (cell.empty())
        throw IoError("load_dataset: missing value at line " + std::to_string(line_no));
      (*target)(t, j) = std::strtod(cell.c_str(), nullptr);
    }
  }
  return data;
}

void check_dataset_matches(const TrajectoryDataset& data, const SystemModel& model,
                           const CostModel& cost, const ExperimenterModel* exp) {
  const uint64_t expected = model_fingerprint(model, cost, exp);
  if (data.fingerprint != expected) {
    std::ostringstream os;
    os << "dataset fingerprint " << data.fingerprint
       << " does not match model fingerprint " << expected;
    throw IoError(os.str());
  }
}

}  // namespace sdnioc
