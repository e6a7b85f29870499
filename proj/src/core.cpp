#include "tpop/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace tpop {

Threshold Threshold::fraction(std::uint64_t num, std::uint64_t den) {
  if (den == 0 || num == 0 || num > den) {
    throw InvalidInput(fmt::format("threshold {}/{} is outside (0, 1]", num, den));
  }
  const std::uint64_t g = std::gcd(num, den);
  return Threshold(num / g, den / g);
}

Threshold Threshold::from_double(double t) {
  if (!std::isfinite(t) || t <= 0.0 || t > 1.0) {
    throw InvalidInput(fmt::format("threshold {} is outside (0, 1]", t));
  }
  // Continued-fraction convergents until one lands within tolerance.
  constexpr double kTolerance = 1e-12;
  constexpr std::uint64_t kMaxDen = 1'000'000'000;
  std::uint64_t h_prev = 0, h = 1;  // numerators
  std::uint64_t k_prev = 1, k = 0;  // denominators
  double x = t;
  std::uint64_t best_num = 1, best_den = 1;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_floor = std::floor(x);
    const auto a = static_cast<std::uint64_t>(a_floor);
    const std::uint64_t h_next = a * h + h_prev;
    const std::uint64_t k_next = a * k + k_prev;
    if (k_next > kMaxDen) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    best_num = h;
    best_den = k;
    if (std::fabs(static_cast<double>(h) / static_cast<double>(k) - t) <= kTolerance) break;
    const double frac = x - a_floor;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  return fraction(best_num, best_den);
}

bool Threshold::below(std::uint64_t count, std::uint64_t base) const {
  // count < (num/den) * base  <=>  count * den < num * base
  const auto lhs = static_cast<unsigned __int128>(count) * den_;
  const auto rhs = static_cast<unsigned __int128>(num_) * base;
  return lhs < rhs;
}

TPoPParams::TPoPParams(Threshold threshold, std::vector<std::uint32_t> witnesses_per_level,
                       DuplicatePolicy policy)
    : threshold_(threshold), witnesses_(std::move(witnesses_per_level)), policy_(policy) {
  if (witnesses_.empty()) {
    throw InvalidInput("depth must be at least 1");
  }
  for (std::size_t l = 0; l < witnesses_.size(); ++l) {
    if (witnesses_[l] == 0) {
      throw InvalidInput(fmt::format("w_{} must be at least 1", l + 1));
    }
  }
}

std::string TPoPParams::label() const {
  const std::string t = threshold_.denominator() == 1
                            ? fmt::format("{}", threshold_.numerator())
                            : fmt::format("{}", threshold_.value());
  return fmt::format("t={},d={},w=[{}]", t, depth(), fmt::join(witnesses_, ","));
}

std::vector<std::uint64_t> level_sizes(const TPoPParams& params) {
  std::vector<std::uint64_t> sizes;
  sizes.reserve(params.depth());
  std::uint64_t n = 1;
  for (std::uint32_t w : params.witnesses_per_level()) {
    n *= w;
    sizes.push_back(n);
  }
  return sizes;
}

std::uint64_t tree_size(const TPoPParams& params) {
  const auto sizes = level_sizes(params);
  return std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{1});
}

std::size_t WitnessTree::node_count() const {
  std::size_t total = 0;
  for (const auto& level : levels) total += level.size();
  return total;
}

std::optional<std::uint64_t> VerificationOutcome::confirmed_at(std::size_t level) const {
  for (const auto& tally : levels) {
    if (tally.level == level) return tally.confirmed;
  }
  return std::nullopt;
}

WitnessTree build_tree(AgentId prover, const TPoPParams& params, ConfirmationOracle& oracle) {
  if (!oracle.knows(prover)) {
    throw InvalidInput(fmt::format("unknown prover {}", prover.value));
  }
  WitnessTree tree;
  tree.levels.resize(params.depth() + 1);
  tree.levels[0].push_back(TreeNode{prover, 0, std::nullopt});

  std::unordered_set<AgentId> in_tree{prover};
  for (std::size_t level = 0; level < params.depth(); ++level) {
    const std::uint32_t quota = params.witnesses_at(level + 1);
    auto& next = tree.levels[level + 1];
    const auto& current = tree.levels[level];
    for (std::size_t idx = 0; idx < current.size(); ++idx) {
      std::uint32_t named = 0;
      for (AgentId candidate : oracle.candidate_witnesses(current[idx].agent)) {
        if (named == quota) break;
        if (!in_tree.insert(candidate).second) continue;
        next.push_back(TreeNode{candidate, level + 1, idx});
        ++named;
      }
      if (named < quota) tree.under_filled = true;
    }
  }
  return tree;
}

namespace {

void check_shape(const WitnessTree& tree, const TPoPParams& params) {
  if (tree.levels.size() != params.depth() + 1) {
    throw InvalidInput(fmt::format("tree has depth {} but parameters have depth {}",
                                   tree.depth(), params.depth()));
  }
  if (tree.levels[0].size() != 1 || tree.levels[0][0].parent.has_value()) {
    throw InvalidInput("level 0 must hold exactly the prover, without a parent");
  }
  for (std::size_t level = 1; level < tree.levels.size(); ++level) {
    const std::size_t parents = tree.levels[level - 1].size();
    std::vector<std::uint32_t> children(parents, 0);
    for (const auto& node : tree.levels[level]) {
      if (!node.parent || *node.parent >= parents) {
        throw InvalidInput(fmt::format("node {} at level {} has no valid parent",
                                       node.agent.value, level));
      }
      if (++children[*node.parent] > params.witnesses_at(level)) {
        throw InvalidInput(fmt::format("a level-{} parent names more than w_{} = {} witnesses",
                                       level - 1, level, params.witnesses_at(level)));
      }
    }
  }
}

// Flags every naming of an agent after its first appearance in breadth-first
// order (which includes any witness that repeats the root).
std::vector<std::vector<bool>> repeated_namings(const WitnessTree& tree, bool& any) {
  std::vector<std::vector<bool>> repeated(tree.levels.size());
  std::unordered_set<AgentId> seen;
  seen.reserve(tree.node_count());
  any = false;
  for (std::size_t level = 0; level < tree.levels.size(); ++level) {
    repeated[level].resize(tree.levels[level].size(), false);
    for (std::size_t idx = 0; idx < tree.levels[level].size(); ++idx) {
      if (!seen.insert(tree.levels[level][idx].agent).second) {
        repeated[level][idx] = true;
        any = true;
      }
    }
  }
  return repeated;
}

}  // namespace

VerificationOutcome verify(const WitnessTree& tree, const TPoPParams& params,
                           const ConfirmationOracle& oracle) {
  check_shape(tree, params);

  VerificationOutcome outcome;
  bool any_repeated = false;
  const auto repeated = repeated_namings(tree, any_repeated);
  if (any_repeated && params.duplicate_policy() == DuplicatePolicy::FailProof) {
    outcome.truthful = false;
    outcome.duplicate_rejected = true;
    return outcome;
  }

  const auto nominal = level_sizes(params);
  const Threshold& t = params.threshold();

  std::vector<std::vector<bool>> eliminated(tree.levels.size());
  for (std::size_t level = 0; level < tree.levels.size(); ++level) {
    eliminated[level].assign(tree.levels[level].size(), false);
  }

  for (std::size_t level = params.depth(); level >= 1; --level) {
    const auto& parents = tree.levels[level - 1];
    const auto& children = tree.levels[level];
    std::vector<std::uint64_t> confirmations(parents.size(), 0);

    for (std::size_t idx = 0; idx < children.size(); ++idx) {
      if (eliminated[level][idx] || repeated[level][idx]) continue;
      const TreeNode& child = children[idx];
      const std::size_t parent_idx = *child.parent;
      if (oracle.confirms(child.agent, parents[parent_idx].agent)) {
        ++confirmations[parent_idx];
      }
    }

    const std::uint32_t quota = params.witnesses_at(level);
    std::uint64_t confirmed = 0;
    for (std::size_t idx = 0; idx < parents.size(); ++idx) {
      confirmed += confirmations[idx];
      const bool drop = t.below(confirmations[idx], quota);
      if (drop) {
        eliminated[level - 1][idx] = true;
        const AgentId agent = parents[idx].agent;
        if (std::find(outcome.eliminated.begin(), outcome.eliminated.end(), agent) ==
            outcome.eliminated.end()) {
          outcome.eliminated.push_back(agent);
        }
      }
      outcome.parents.push_back(
          ParentTally{level - 1, idx, parents[idx].agent, confirmations[idx], drop});
    }

    const std::uint64_t n_l = nominal[level - 1];
    outcome.levels.push_back(LevelTally{level, confirmed, n_l});
    if (t.below(confirmed, n_l)) {
      outcome.truthful = false;
      outcome.failure_level = level;
      return outcome;
    }
  }

  outcome.truthful = !eliminated[0][0];
  return outcome;
}

}  // namespace tpop
