// Graphical probability model of T-PoP: every agent's honesty and coercion
// are independent Bernoulli draws, and a witness confirms its parent
// according to a fixed 4x4 truth table over the pair of states. Trees are
// always full and every witness is a fresh agent.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "tpop/core.hpp"
#include "tpop/metrics.hpp"
#include "tpop/rng.hpp"

namespace tpop::model {

/// Ordered as the rows/columns of the truth table.
enum class NodeState : std::uint8_t {
  HonestFree = 0,        // h and not c
  HonestCoerced = 1,     // h and c
  DishonestCoerced = 2,  // not h and c
  DishonestFree = 3,     // not h and not c
};

inline constexpr std::array<NodeState, 4> kAllStates = {
    NodeState::HonestFree, NodeState::HonestCoerced, NodeState::DishonestCoerced,
    NodeState::DishonestFree};

constexpr NodeState make_state(bool honest, bool coerced) {
  if (honest) return coerced ? NodeState::HonestCoerced : NodeState::HonestFree;
  return coerced ? NodeState::DishonestCoerced : NodeState::DishonestFree;
}

constexpr bool is_honest(NodeState s) {
  return s == NodeState::HonestFree || s == NodeState::HonestCoerced;
}

constexpr bool is_coerced(NodeState s) {
  return s == NodeState::HonestCoerced || s == NodeState::DishonestCoerced;
}

/// Rows: parent state, columns: witness state.
inline constexpr std::array<std::array<bool, 4>, 4> kTruthTable = {{
    {true, true, true, true},
    {true, true, false, false},
    {true, false, true, false},
    {true, false, false, true},
}};

constexpr bool confirm_states(NodeState parent, NodeState witness) {
  return kTruthTable[static_cast<std::size_t>(parent)][static_cast<std::size_t>(witness)];
}

struct StatePriors {
  double p_h = 0.0;
  double p_c = 0.0;

  /// Throws InvalidInput unless both lie in [0, 1].
  void validate() const;
  double probability(NodeState s) const;
};

NodeState draw_state(const StatePriors& priors, Rng& rng);

struct TreeSample {
  NodeState root_state;
  bool verdict;
};

/// Full tree for `params` with agent ids 0..size-1 in breadth-first order,
/// reused across draws; each draw assigns fresh states and runs verify.
class TreeSampler {
 public:
  explicit TreeSampler(TPoPParams params);

  const TPoPParams& params() const { return params_; }
  const WitnessTree& tree() const { return tree_; }
  std::size_t size() const { return size_; }

  /// Verdict for a given assignment; states[k] belongs to agent id k.
  bool verdict(std::span<const NodeState> states) const;

  TreeSample sample(const StatePriors& priors, Rng& rng);

 private:
  TPoPParams params_;
  WitnessTree tree_;
  std::size_t size_;
  std::vector<NodeState> scratch_;
};

TreeSample sample_tree_outcome(const TPoPParams& params, const StatePriors& priors,
                               std::uint64_t seed);

struct CellEstimate {
  std::optional<double> reliability;
  std::optional<double> security;
  std::uint64_t honest_roots = 0;
  std::uint64_t dishonest_roots = 0;
  std::uint64_t honest_accepted = 0;
  std::uint64_t dishonest_rejected = 0;
};

CellEstimate estimate_cell(const TPoPParams& params, const StatePriors& priors,
                           std::uint64_t n_trees, std::uint64_t seed);

/// Same as above, reusing a prepared sampler.
CellEstimate estimate_cell(TreeSampler& sampler, const StatePriors& priors, std::uint64_t n_trees,
                           std::uint64_t seed);

struct ExactCell {
  std::optional<double> reliability;  // empty when p_h == 0
  std::optional<double> security;     // empty when p_h == 1
};

inline constexpr std::size_t kMaxExactTreeSize = 10;

/// Enumerates all 4^size state assignments. Throws InvalidInput when the tree
/// has more than kMaxExactTreeSize nodes.
ExactCell exact_cell(const TPoPParams& params, const StatePriors& priors);

struct SweepOptions {
  double grid_step = 0.02;
  std::uint64_t trees_per_cell = 5000;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
};

struct MapPair {
  metrics::PerformanceMap reliability;
  metrics::PerformanceMap security;
};

/// Per-cell seeds derive from (master seed, cell index) only.
MapPair sweep_grid(const TPoPParams& params, const SweepOptions& options);

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index);

}  // namespace tpop::model
