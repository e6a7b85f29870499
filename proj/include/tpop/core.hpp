// Tree-Proof-of-Position: domain types, witness-tree construction and
// threshold verification.
//
// Both algorithms are written against ConfirmationOracle so the same code
// drives the graphical model (synthetic agents with drawn states) and the
// spatial simulator (agents with positions and neighbour sets).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpop {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AgentId {
  std::uint64_t value = 0;

  friend constexpr bool operator==(AgentId, AgentId) = default;
  friend constexpr auto operator<=>(AgentId, AgentId) = default;
};

/// Fraction t in (0, 1], held as an exact rational so that K < t*w and
/// M < t*n are decided without rounding the right-hand side.
class Threshold {
 public:
  /// Throws InvalidInput unless 0 < num/den <= 1.
  static Threshold fraction(std::uint64_t num, std::uint64_t den);

  /// Recovers the simplest fraction within 1e-12 of `t` (0.5 -> 1/2,
  /// 0.7 -> 7/10). Throws InvalidInput when t is outside (0, 1].
  static Threshold from_double(double t);

  std::uint64_t numerator() const { return num_; }
  std::uint64_t denominator() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// True iff count < t * base.
  bool below(std::uint64_t count, std::uint64_t base) const;

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  Threshold(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {}
  std::uint64_t num_;
  std::uint64_t den_;
};

enum class DuplicatePolicy {
  Discount,   // repeated namings never count as confirmations
  FailProof,  // any repeated naming rejects the prover outright
};

/// theta = {t, d, w_1..w_d}; the depth is the length of the witness list.
class TPoPParams {
 public:
  TPoPParams(Threshold threshold, std::vector<std::uint32_t> witnesses_per_level,
             DuplicatePolicy policy = DuplicatePolicy::Discount);

  const Threshold& threshold() const { return threshold_; }
  std::size_t depth() const { return witnesses_.size(); }
  /// w_l for l in 1..depth.
  std::uint32_t witnesses_at(std::size_t level) const { return witnesses_.at(level - 1); }
  const std::vector<std::uint32_t>& witnesses_per_level() const { return witnesses_; }
  DuplicatePolicy duplicate_policy() const { return policy_; }

  /// "t=1,d=2,w=[2,2]"
  std::string label() const;

  friend bool operator==(const TPoPParams&, const TPoPParams&) = default;

 private:
  Threshold threshold_;
  std::vector<std::uint32_t> witnesses_;
  DuplicatePolicy policy_;
};

/// n_l = w_l * n_{l-1} with n_0 = 1; returns [n_1..n_d].
std::vector<std::uint64_t> level_sizes(const TPoPParams& params);

/// 1 + sum of n_l.
std::uint64_t tree_size(const TPoPParams& params);

struct TreeNode {
  AgentId agent;
  std::size_t level = 0;
  /// Index into the previous level's node list; empty only for the root.
  std::optional<std::size_t> parent;
};

struct WitnessTree {
  /// levels[0] holds exactly the prover.
  std::vector<std::vector<TreeNode>> levels;
  bool under_filled = false;

  AgentId root() const { return levels.at(0).at(0).agent; }
  std::size_t depth() const { return levels.empty() ? 0 : levels.size() - 1; }
  std::size_t node_count() const;
};

class ConfirmationOracle {
 public:
  virtual ~ConfirmationOracle() = default;

  virtual bool knows(AgentId agent) const = 0;

  /// Agents `parent` may name as witnesses, in naming preference order.
  virtual std::vector<AgentId> candidate_witnesses(AgentId parent) = 0;

  /// Whether `witness` vouches that `parent` is its neighbour. Must be a pure
  /// function of the oracle's snapshot.
  virtual bool confirms(AgentId witness, AgentId parent) const = 0;
};

/// Breadth-first construction: every level-l node names up to w_{l+1} agents
/// from the oracle's candidate list, skipping agents already in the tree.
WitnessTree build_tree(AgentId prover, const TPoPParams& params, ConfirmationOracle& oracle);

struct LevelTally {
  std::size_t level = 0;
  std::uint64_t confirmed = 0;  // M_l
  std::uint64_t nominal = 0;    // n_l

  friend bool operator==(const LevelTally&, const LevelTally&) = default;
};

struct ParentTally {
  std::size_t level = 0;  // level of the parent itself
  std::size_t index = 0;  // position within that level
  AgentId agent;
  std::uint64_t confirmations = 0;  // K_b
  bool eliminated = false;

  friend bool operator==(const ParentTally&, const ParentTally&) = default;
};

struct VerificationOutcome {
  bool truthful = false;
  /// In evaluation order: M_d first, down to the level that stopped the run.
  std::vector<LevelTally> levels;
  std::vector<ParentTally> parents;
  /// Distinct agents removed from the tree, in elimination order.
  std::vector<AgentId> eliminated;
  std::optional<std::size_t> failure_level;
  /// Set when FailProof rejected the prover on a repeated naming.
  bool duplicate_rejected = false;

  std::optional<std::uint64_t> confirmed_at(std::size_t level) const;

  friend bool operator==(const VerificationOutcome&, const VerificationOutcome&) = default;
};

/// Bottom-up threshold verification. Throws InvalidInput when the tree's
/// shape does not fit `params`.
VerificationOutcome verify(const WitnessTree& tree, const TPoPParams& params,
                           const ConfirmationOracle& oracle);

}  // namespace tpop

template <>
struct std::hash<tpop::AgentId> {
  std::size_t operator()(tpop::AgentId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
