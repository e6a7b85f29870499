#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tpop/graphical_model.hpp"
#include "tpop/heatmap.hpp"
#include "tpop/map_io.hpp"
#include "tpop/tree_json.hpp"
#include "tpop/world.hpp"

namespace tpop::cli {

using nlohmann::json;
using metrics::MapSource;
using metrics::MetricKind;
using metrics::PerformanceMap;

namespace {

// Output that cannot be written; mapped to kExitFailure.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw OutputError(fmt::format("cannot create output directory {}: {}", dir.string(),
                                  ec ? ec.message() : "not a directory"));
  }
  return dir;
}

void save(const std::filesystem::path& path, const std::string& text, std::ostream& log) {
  try {
    io::save_text(path, text);
  } catch (const std::exception& e) {
    throw OutputError(e.what());
  }
  log << "wrote " << path.string() << '\n';
}

std::string map_title(const PerformanceMap& map, const std::string& label) {
  const std::string kind = map.kind() == MetricKind::Reliability ? "R" : "S";
  switch (map.source()) {
    case MapSource::Model:
      return fmt::format("{} (model), {}", kind, label);
    case MapSource::Simulation:
      return fmt::format("{} (simulation), {}", kind, label);
    case MapSource::Divergence:
      return fmt::format("pointwise JSD of {}, {}", kind, label);
  }
  return label;
}

void save_map(const std::filesystem::path& dir, const std::string& stem, const PerformanceMap& map,
              const std::string& label, std::ostream& log) {
  save(dir / (stem + ".csv"), io::to_csv(map), log);
  save(dir / (stem + ".svg"), io::render_svg(map, map_title(map, label)), log);
}

json world_to_json(const world::WorldConfig& w) {
  return json{{"n_agents", w.n_agents},
              {"range_of_sight", w.range_of_sight},
              {"target_avg_neighbors", w.target_avg_neighbors},
              {"width", w.width},
              {"height", w.height},
              {"speed", w.speed}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("{}: malformed JSON: {}", path.string(), e.what()));
  }
}

}  // namespace

void cmd_model(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto dir = prepare_dir(config.output_dir);
  model::SweepOptions options;
  options.grid_step = config.grid_step;
  options.trees_per_cell = config.model_trees_per_cell;
  options.master_seed = config.master_seed;
  options.jobs = config.jobs;
  const model::MapPair maps = model::sweep_grid(config.theta, options);

  const std::string label = config.label();
  save_map(dir, "r_model", maps.reliability, label, log);
  save_map(dir, "s_model", maps.security, label, log);
  const json meta{{"command", "model"},
                  {"theta_label", label},
                  {"theta", io::params_to_json(config.theta)},
                  {"grid_step", config.grid_step},
                  {"model_trees_per_cell", config.model_trees_per_cell},
                  {"master_seed", config.master_seed}};
  save(dir / "run.json", dump(meta), log);
}

void cmd_sim(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto dir = prepare_dir(config.output_dir);
  world::WorldSweepOptions options;
  options.grid_step = config.grid_step;
  options.runs_per_cell = config.sim_runs_per_cell;
  options.master_seed = config.master_seed;
  options.jobs = config.jobs;
  options.single_point = config.point;
  const world::WorldSweep sweep = world::sweep_world(config.world, config.theta, options);

  const std::string label = config.label();
  save_map(dir, "r_sim", sweep.maps.reliability, label, log);
  save_map(dir, "s_sim", sweep.maps.security, label, log);

  json cells = json::array();
  for (const auto& cell : sweep.cells) {
    json runs = json::array();
    for (const auto& r : cell.runs) {
      runs.push_back({r.counts.honest_accepted, r.counts.honest_rejected, r.counts.dishonest_accepted,
                      r.counts.dishonest_rejected, r.under_filled});
    }
    const auto& p = cell.pooled;
    cells.push_back({{"p_h", cell.priors.p_h},
                     {"p_c", cell.priors.p_c},
                     {"runs", std::move(runs)},
                     {"pooled",
                      {p.counts.honest_accepted, p.counts.honest_rejected, p.counts.dishonest_accepted,
                       p.counts.dishonest_rejected, p.under_filled}}});
  }
  const json counts{
      {"theta_label", label},
      {"columns", {"honest_accepted", "honest_rejected", "dishonest_accepted", "dishonest_rejected",
                   "under_filled"}},
      {"cells", std::move(cells)}};
  save(dir / "confusion_counts.json", counts.dump() + "\n", log);

  json meta{{"command", "sim"},
            {"theta_label", label},
            {"theta", io::params_to_json(config.theta)},
            {"grid_step", config.grid_step},
            {"sim_runs_per_cell", config.sim_runs_per_cell},
            {"master_seed", config.master_seed},
            {"world", world_to_json(config.world)}};
  if (config.point) meta["point"] = {config.point->p_h, config.point->p_c};
  save(dir / "run.json", dump(meta), log);
}

std::vector<JsdEntry> cmd_validate(const std::filesystem::path& model_dir,
                                   const std::filesystem::path& sim_dir,
                                   const std::filesystem::path& out_dir, const std::string& label,
                                   std::ostream& log) {
  struct Pair {
    MetricKind kind;
    const char* model_file;
    const char* sim_file;
    const char* stem;
  };
  const Pair pairs[] = {{MetricKind::Reliability, "r_model.csv", "r_sim.csv", "jsd_r"},
                        {MetricKind::Security, "s_model.csv", "s_sim.csv", "jsd_s"}};

  std::vector<std::pair<Pair, std::pair<PerformanceMap, PerformanceMap>>> loaded;
  for (const auto& p : pairs) {
    auto m = io::load_csv(model_dir / p.model_file, p.kind, MapSource::Model);
    auto s = io::load_csv(sim_dir / p.sim_file, p.kind, MapSource::Simulation);
    if (!m.same_shape(s)) {
      throw InvalidInput(fmt::format("grid mismatch between {} ({}x{}) and {} ({}x{})",
                                     (model_dir / p.model_file).string(), m.rows(), m.cols(),
                                     (sim_dir / p.sim_file).string(), s.rows(), s.cols()));
    }
    loaded.push_back({p, {std::move(m), std::move(s)}});
  }

  const auto dir = prepare_dir(out_dir);
  std::vector<JsdEntry> entries;
  json report = json::array();
  for (const auto& [p, maps] : loaded) {
    const auto& [m, s] = maps;
    JsdEntry e{p.kind, label, std::nullopt, std::string(p.stem) + ".csv"};
    try {
      e.global = metrics::global_jsd(m, s);
    } catch (const InvalidInput& ex) {
      log << "global JSD for " << metrics::to_string(p.kind) << " undefined: " << ex.what() << '\n';
    }
    save_map(dir, p.stem, metrics::pointwise_jsd(m, s), label, log);
    report.push_back({{"kind", metrics::to_string(e.kind)},
                      {"theta_label", e.theta_label},
                      {"global", e.global ? json(*e.global) : json(nullptr)},
                      {"pointwise_csv_path", e.pointwise_csv_path}});
    entries.push_back(std::move(e));
  }
  save(dir / "jsd_report.json", dump(report), log);
  return entries;
}

int cmd_verify_tree(const VerifyTreeRequest& request, std::ostream& out) {
  const json scenario = read_json_file(request.scenario);
  if (!scenario.is_object()) throw InvalidInput("scenario must be a JSON object");

  const bool has_theta = scenario.contains("theta");
  if (!has_theta && !(request.threshold && request.witnesses)) {
    throw InvalidInput("scenario has no theta; pass --threshold and --witnesses");
  }
  const TPoPParams base = has_theta ? io::params_from_json(scenario.at("theta"))
                                    : TPoPParams(Threshold::fraction(1, 1), *request.witnesses);
  const Threshold threshold =
      request.threshold ? Threshold::from_double(*request.threshold) : base.threshold();
  const std::vector<std::uint32_t> witnesses =
      request.witnesses ? *request.witnesses : base.witnesses_per_level();
  const DuplicatePolicy policy = request.duplicate_policy
                                     ? io::parse_duplicate_policy(*request.duplicate_policy)
                                     : base.duplicate_policy();
  const TPoPParams params(threshold, witnesses, policy);

  if (!scenario.contains("tree")) throw InvalidInput("scenario has no tree");
  io::AgentDirectory dir;
  const WitnessTree tree = io::tree_from_json(scenario.at("tree"), dir);

  json confirmations = json::array();
  if (request.confirmations) {
    confirmations = read_json_file(*request.confirmations);
  } else if (scenario.contains("confirmations")) {
    confirmations = scenario.at("confirmations");
  }
  const io::ConfirmationTable table = io::confirmations_from_json(confirmations, dir);
  const VerificationOutcome outcome = verify(tree, params, table);

  if (request.json) {
    out << io::outcome_to_json(outcome, dir).dump(2) << '\n';
  } else {
    out << "verdict: " << (outcome.truthful ? "truthful" : "untruthful") << '\n';
    out << "theta: " << params.label() << '\n';
    for (const auto& lv : outcome.levels) {
      out << fmt::format("M_{} = {} of {}\n", lv.level, lv.confirmed, lv.nominal);
    }
    std::vector<std::string> names;
    for (AgentId id : outcome.eliminated) names.push_back(dir.name(id));
    out << "eliminated: " << (names.empty() ? "none" : fmt::format("{}", fmt::join(names, " "))) << '\n';
    if (outcome.failure_level) out << "failed at level " << *outcome.failure_level << '\n';
    if (outcome.duplicate_rejected) out << "rejected: duplicate witness\n";
  }
  return outcome.truthful ? kExitOk : kExitUntruthful;
}

namespace {

std::vector<std::uint32_t> parse_witness_list(const std::string& text) {
  std::vector<std::uint32_t> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 1 || v > 0xFFFFFFFFLL) {
      throw InvalidInput(fmt::format("--witnesses entry '{}' is not a positive integer", item));
    }
    w.push_back(static_cast<std::uint32_t>(v));
  }
  if (w.empty()) throw InvalidInput("--witnesses needs at least one count");
  return w;
}

model::StatePriors parse_point(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument("no comma");
    std::size_t used_h = 0;
    std::size_t used_c = 0;
    const std::string h = text.substr(0, comma);
    const std::string c = text.substr(comma + 1);
    model::StatePriors p{std::stod(h, &used_h), std::stod(c, &used_c)};
    if (used_h != h.size() || used_c != c.size()) throw std::invalid_argument("trailing text");
    p.validate();
    return p;
  } catch (const InvalidInput&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidInput(fmt::format("--point '{}' must be P_H,P_C", text));
  }
}

// theta_label from a model run's run.json, when there is one.
std::optional<std::string> recorded_label(const std::filesystem::path& dir) {
  std::ifstream in(dir / "run.json", std::ios::binary);
  if (!in) return std::nullopt;
  const json meta = json::parse(in, nullptr, false);
  if (meta.is_object() && meta.contains("theta_label") && meta["theta_label"].is_string()) {
    return meta["theta_label"].get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-Proof-of-Position library driver", "tpop"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> grid_step;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "YAML experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--grid-step", grid_step, "grid spacing for p_h and p_c");
  app.add_option("--out", out_dir, "output directory");

  auto* model_cmd = app.add_subcommand("model", "graphical-model R and S maps");
  model_cmd->fallthrough();
  std::optional<std::uint64_t> trees;
  model_cmd->add_option("--trees", trees, "trees per cell")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("sim", "agent-based R and S maps");
  sim_cmd->fallthrough();
  std::optional<std::uint64_t> runs;
  std::optional<std::string> point;
  sim_cmd->add_option("--runs", runs, "runs per cell")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--point", point, "single cell P_H,P_C");

  auto* validate_cmd = app.add_subcommand("validate", "JSD between model and simulation maps");
  validate_cmd->fallthrough();
  std::string model_dir;
  std::string sim_dir;
  std::optional<std::string> label;
  validate_cmd->add_option("--model-dir", model_dir, "directory holding r_model.csv, s_model.csv")
      ->required();
  validate_cmd->add_option("--sim-dir", sim_dir, "directory holding r_sim.csv, s_sim.csv")->required();
  validate_cmd->add_option("--label", label, "theta label for the report");

  auto* verify_cmd = app.add_subcommand("verify-tree", "verify a witness tree from JSON");
  verify_cmd->fallthrough();
  VerifyTreeRequest request;
  std::string scenario;
  std::optional<std::string> confirmations;
  std::optional<std::string> witnesses;
  verify_cmd->add_option("scenario", scenario, "scenario JSON (theta, tree, confirmations)")
      ->required();
  verify_cmd->add_option("--confirmations", confirmations, "confirmation triples JSON");
  verify_cmd->add_option("--threshold", request.threshold, "threshold t in (0, 1]");
  verify_cmd->add_option("--witnesses", witnesses, "comma-separated w_1,...,w_d");
  verify_cmd->add_option("--duplicate-policy", request.duplicate_policy, "discount or fail_proof");
  verify_cmd->add_flag("--json", request.json, "print the outcome as JSON");

  std::vector<const char*> argv{"tpop"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (verify_cmd->parsed()) {
      request.scenario = scenario;
      if (confirmations) request.confirmations = *confirmations;
      if (witnesses) request.witnesses = parse_witness_list(*witnesses);
      return cmd_verify_tree(request, out);
    }

    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) config.master_seed = *seed;
    if (jobs) config.jobs = *jobs;
    if (grid_step) config.grid_step = *grid_step;
    if (out_dir) config.output_dir = *out_dir;
    if (trees) config.model_trees_per_cell = *trees;
    if (runs) config.sim_runs_per_cell = *runs;
    if (point) config.point = parse_point(*point);

    if (model_cmd->parsed()) {
      cmd_model(config, out);
    } else if (sim_cmd->parsed()) {
      cmd_sim(config, out);
    } else {
      if (!label) label = recorded_label(model_dir);
      if (!label) label = config.label();
      const auto entries = cmd_validate(model_dir, sim_dir, config.output_dir, *label, out);
      for (const auto& e : entries) {
        out << fmt::format("global JSD {}: {}\n", metrics::to_string(e.kind),
                           e.global ? fmt::format("{:.4f}", *e.global) : "undefined");
      }
    }
    return kExitOk;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace tpop::cli
