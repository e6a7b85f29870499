#include "experiment_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "tpop/metrics.hpp"
#include "tpop/tree_json.hpp"

namespace tpop::cli {

using world::ConfigError;

void ExperimentConfig::validate() const {
  if (model_trees_per_cell < 1) throw ConfigError("model_trees_per_cell must be at least 1");
  if (sim_runs_per_cell < 1) throw ConfigError("sim_runs_per_cell must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!(grid_step > 0.0) || grid_step > 0.5) {
    throw ConfigError(fmt::format("grid_step {} is outside (0, 0.5]", grid_step));
  }
  try {
    metrics::grid_axis(grid_step);
    if (point) point->validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  world.validate();
}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    if (mark.line >= 0) throw ConfigError(fmt::format("{}:{}: {}", source_, mark.line + 1, what));
    throw ConfigError(fmt::format("{}: {}", source_, what));
  }

  void only_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                 const std::string& section) const {
    if (!map.IsMap()) fail(map, fmt::format("{} must be a mapping", section));
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) {
        fail(kv.first, fmt::format("unknown key '{}{}'", section.empty() ? "" : section + ".", key));
      }
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& name) const {
    if (!node.IsScalar()) fail(node, fmt::format("{} must be a scalar", name));
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("{} has an invalid value '{}'", name, node.Scalar()));
    }
  }

  std::uint64_t count(const YAML::Node& node, const std::string& name) const {
    const auto v = scalar<long long>(node, name);
    if (v < 1) fail(node, fmt::format("{} must be at least 1", name));
    return static_cast<std::uint64_t>(v);
  }

  double positive(const YAML::Node& node, const std::string& name) const {
    const auto v = scalar<double>(node, name);
    if (!(v > 0.0)) fail(node, fmt::format("{} must be positive", name));
    return v;
  }

 private:
  std::string source_;
};

TPoPParams read_theta(const Reader& rd, const YAML::Node& node, std::string& label) {
  rd.only_keys(node, {"label", "threshold", "depth", "witnesses", "duplicate_policy"}, "theta");
  double threshold = 1.0;
  if (node["threshold"]) threshold = rd.scalar<double>(node["threshold"], "theta.threshold");
  std::vector<std::uint32_t> witnesses{6};
  if (const auto w = node["witnesses"]) {
    if (!w.IsSequence() || w.size() == 0) rd.fail(w, "theta.witnesses must be a non-empty list");
    witnesses.clear();
    for (std::size_t k = 0; k < w.size(); ++k) {
      witnesses.push_back(static_cast<std::uint32_t>(rd.count(w[k], fmt::format("theta.witnesses[{}]", k))));
    }
  }
  if (const auto d = node["depth"]) {
    if (rd.count(d, "theta.depth") != witnesses.size()) {
      rd.fail(d, fmt::format("theta.depth must equal the number of witness counts ({})", witnesses.size()));
    }
  }
  DuplicatePolicy policy = DuplicatePolicy::Discount;
  if (const auto p = node["duplicate_policy"]) {
    try {
      policy = io::parse_duplicate_policy(rd.scalar<std::string>(p, "theta.duplicate_policy"));
    } catch (const InvalidInput& e) {
      rd.fail(p, e.what());
    }
  }
  if (node["label"]) label = rd.scalar<std::string>(node["label"], "theta.label");
  try {
    return TPoPParams(Threshold::from_double(threshold), witnesses, policy);
  } catch (const InvalidInput& e) {
    rd.fail(node["threshold"] ? node["threshold"] : node, e.what());
  }
}

world::WorldConfig read_world(const Reader& rd, const YAML::Node& node) {
  rd.only_keys(node, {"n_agents", "range_of_sight", "target_avg_neighbors", "width", "height", "speed"},
               "world");
  std::size_t n = 1000;
  double r = 1.0;
  double target = 50.0;
  if (node["n_agents"]) n = rd.count(node["n_agents"], "world.n_agents");
  if (node["range_of_sight"]) r = rd.positive(node["range_of_sight"], "world.range_of_sight");
  if (node["target_avg_neighbors"]) {
    target = rd.positive(node["target_avg_neighbors"], "world.target_avg_neighbors");
  }
  world::WorldConfig cfg = world::WorldConfig::calibrated(n, r, target);
  const bool has_w = static_cast<bool>(node["width"]);
  const bool has_h = static_cast<bool>(node["height"]);
  if (has_w != has_h) rd.fail(has_w ? node["width"] : node["height"], "give both width and height, or neither");
  if (has_w) {
    cfg.width = rd.positive(node["width"], "world.width");
    cfg.height = rd.positive(node["height"], "world.height");
  }
  if (node["speed"]) {
    cfg.speed = rd.scalar<double>(node["speed"], "world.speed");
    if (!(cfg.speed >= 0.0)) rd.fail(node["speed"], "world.speed must be >= 0");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    rd.fail(node, e.what());
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  ExperimentConfig cfg;
  if (root.IsNull()) return cfg;

  const Reader rd(source);
  rd.only_keys(root,
               {"theta", "grid_step", "model_trees_per_cell", "sim_runs_per_cell", "world",
                "master_seed", "jobs", "output_dir", "point"},
               "");
  if (root["theta"]) cfg.theta = read_theta(rd, root["theta"], cfg.theta_label);
  if (const auto g = root["grid_step"]) {
    cfg.grid_step = rd.scalar<double>(g, "grid_step");
    if (!(cfg.grid_step > 0.0) || cfg.grid_step > 0.5) rd.fail(g, "grid_step must be in (0, 0.5]");
    try {
      metrics::grid_axis(cfg.grid_step);
    } catch (const InvalidInput& e) {
      rd.fail(g, e.what());
    }
  }
  if (root["model_trees_per_cell"]) {
    cfg.model_trees_per_cell = rd.count(root["model_trees_per_cell"], "model_trees_per_cell");
  }
  if (root["sim_runs_per_cell"]) {
    cfg.sim_runs_per_cell = rd.count(root["sim_runs_per_cell"], "sim_runs_per_cell");
  }
  if (root["master_seed"]) cfg.master_seed = rd.scalar<std::uint64_t>(root["master_seed"], "master_seed");
  if (root["jobs"]) cfg.jobs = rd.count(root["jobs"], "jobs");
  if (root["output_dir"]) cfg.output_dir = rd.scalar<std::string>(root["output_dir"], "output_dir");
  if (root["world"]) cfg.world = read_world(rd, root["world"]);
  if (const auto p = root["point"]) {
    if (!p.IsSequence() || p.size() != 2) rd.fail(p, "point must be [p_h, p_c]");
    model::StatePriors pt{rd.scalar<double>(p[0], "point[0]"), rd.scalar<double>(p[1], "point[1]")};
    try {
      pt.validate();
    } catch (const InvalidInput& e) {
      rd.fail(p, e.what());
    }
    cfg.point = pt;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace tpop::cli
