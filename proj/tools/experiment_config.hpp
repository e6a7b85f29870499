// Experiment configuration, read from a YAML file. Every field is optional;
// the defaults reproduce the full-size experiments (theta_1, step 0.02, 5000
// model trees and 50 simulator runs per cell, 1000 agents averaging 50
// neighbours).
//
//   theta:
//     label: theta1
//     threshold: 1
//     witnesses: [6]
//     duplicate_policy: discount      # or fail_proof
//   grid_step: 0.02
//   model_trees_per_cell: 5000
//   sim_runs_per_cell: 50
//   master_seed: 1
//   jobs: 1
//   output_dir: out
//   point: [0.95, 0.1]                # optional: simulate one cell only
//   world:
//     n_agents: 1000
//     range_of_sight: 1.0
//     target_avg_neighbors: 50
//     width: 7.93                     # both omitted: square sized to target
//     height: 7.93
//     speed: 0.05

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "tpop/core.hpp"
#include "tpop/graphical_model.hpp"
#include "tpop/world.hpp"

namespace tpop::cli {

struct ExperimentConfig {
  TPoPParams theta{Threshold::fraction(1, 1), {6}};
  std::string theta_label;
  double grid_step = 0.02;
  std::uint64_t model_trees_per_cell = 5000;
  std::uint64_t sim_runs_per_cell = 50;
  world::WorldConfig world = world::WorldConfig::calibrated();
  std::uint64_t master_seed = 1;
  std::size_t jobs = 1;
  std::filesystem::path output_dir = "out";
  std::optional<model::StatePriors> point;

  std::string label() const { return theta_label.empty() ? theta.label() : theta_label; }

  /// Throws ConfigError unless counts are >= 1, grid_step is in (0, 0.5]
  /// and divides 1, and the world passes its own validation.
  void validate() const;
};

/// Line-precise ConfigError messages use `source` as the file name.
ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace tpop::cli
