// The four tpop subcommands, callable in-process so tests can drive them.
//
//   tpop [--config PATH] [--seed N] [--jobs N] [--grid-step F] [--out DIR] <command> ...
//
//   model                         r_model.csv, s_model.csv (+ .svg), run.json
//   sim [--point P_H,P_C]         r_sim.csv, s_sim.csv (+ .svg), confusion_counts.json, run.json
//   validate --model-dir D --sim-dir D [--label L]
//                                 jsd_r.csv, jsd_s.csv (+ .svg), jsd_report.json
//   verify-tree SCENARIO.json [--confirmations FILE] [--threshold T]
//               [--witnesses W1,W2,...] [--duplicate-policy P] [--json]
//
// Exit codes: verify-tree returns 0 truthful, 1 untruthful, 2 input error.
// The other commands return 0 on success, 2 on invalid input or config and
// 1 when output cannot be written.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "experiment_config.hpp"
#include "tpop/metrics.hpp"

namespace tpop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUntruthful = 1;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInputError = 2;

/// Writes the model maps into config.output_dir.
void cmd_model(const ExperimentConfig& config, std::ostream& log);

/// Writes the simulation maps into config.output_dir.
void cmd_sim(const ExperimentConfig& config, std::ostream& log);

struct JsdEntry {
  metrics::MetricKind kind;
  std::string theta_label;
  std::optional<double> global;
  std::string pointwise_csv_path;
};

/// Compares <model_dir>/{r,s}_model.csv with <sim_dir>/{r,s}_sim.csv.
std::vector<JsdEntry> cmd_validate(const std::filesystem::path& model_dir,
                                   const std::filesystem::path& sim_dir,
                                   const std::filesystem::path& out_dir, const std::string& label,
                                   std::ostream& log);

struct VerifyTreeRequest {
  std::filesystem::path scenario;
  std::optional<std::filesystem::path> confirmations;
  std::optional<double> threshold;
  std::optional<std::vector<std::uint32_t>> witnesses;
  std::optional<std::string> duplicate_policy;
  bool json = false;
};

/// Prints the verdict and returns the exit code.
int cmd_verify_tree(const VerifyTreeRequest& request, std::ostream& out);

/// Full command line entry point; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tpop::cli
