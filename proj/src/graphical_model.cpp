#include "tpop/graphical_model.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "tpop/parallel.hpp"

namespace tpop::model {

void StatePriors::validate() const {
  if (!(p_h >= 0.0 && p_h <= 1.0) || !(p_c >= 0.0 && p_c <= 1.0)) {
    throw InvalidInput(fmt::format("priors (p_h={}, p_c={}) must lie in [0, 1]", p_h, p_c));
  }
}

double StatePriors::probability(NodeState s) const {
  const double h = is_honest(s) ? p_h : 1.0 - p_h;
  const double c = is_coerced(s) ? p_c : 1.0 - p_c;
  return h * c;
}

NodeState draw_state(const StatePriors& priors, Rng& rng) {
  const bool honest = bernoulli(rng, priors.p_h);
  const bool coerced = bernoulli(rng, priors.p_c);
  return make_state(honest, coerced);
}

namespace {

// Hands out fresh ids in breadth-first order, exactly w_{l+1} per level-l node.
class FreshAgentLayout final : public ConfirmationOracle {
 public:
  explicit FreshAgentLayout(const TPoPParams& params) : params_(params), level_of_{0} {}

  bool knows(AgentId agent) const override { return agent.value < level_of_.size(); }

  std::vector<AgentId> candidate_witnesses(AgentId parent) override {
    const std::size_t level = level_of_.at(parent.value);
    std::vector<AgentId> named;
    if (level >= params_.depth()) return named;
    const std::uint32_t quota = params_.witnesses_at(level + 1);
    for (std::uint32_t k = 0; k < quota; ++k) {
      named.push_back(AgentId{level_of_.size()});
      level_of_.push_back(level + 1);
    }
    return named;
  }

  bool confirms(AgentId, AgentId) const override { return false; }

 private:
  const TPoPParams& params_;
  std::vector<std::size_t> level_of_;
};

class StateOracle final : public ConfirmationOracle {
 public:
  explicit StateOracle(std::span<const NodeState> states) : states_(states) {}

  bool knows(AgentId agent) const override { return agent.value < states_.size(); }
  std::vector<AgentId> candidate_witnesses(AgentId) override { return {}; }
  bool confirms(AgentId witness, AgentId parent) const override {
    return confirm_states(states_[parent.value], states_[witness.value]);
  }

 private:
  std::span<const NodeState> states_;
};

}  // namespace

TreeSampler::TreeSampler(TPoPParams params) : params_(std::move(params)) {
  FreshAgentLayout layout(params_);
  tree_ = build_tree(AgentId{0}, params_, layout);
  size_ = tree_.node_count();
  scratch_.resize(size_);
}

bool TreeSampler::verdict(std::span<const NodeState> states) const {
  StateOracle oracle(states);
  return verify(tree_, params_, oracle).truthful;
}

TreeSample TreeSampler::sample(const StatePriors& priors, Rng& rng) {
  for (auto& s : scratch_) s = draw_state(priors, rng);
  return TreeSample{scratch_[0], verdict(scratch_)};
}

TreeSample sample_tree_outcome(const TPoPParams& params, const StatePriors& priors,
                               std::uint64_t seed) {
  priors.validate();
  TreeSampler sampler(params);
  Rng rng(seed);
  return sampler.sample(priors, rng);
}

CellEstimate estimate_cell(TreeSampler& sampler, const StatePriors& priors, std::uint64_t n_trees,
                           std::uint64_t seed) {
  priors.validate();
  if (n_trees == 0) throw InvalidInput("n_trees must be at least 1");
  Rng rng(seed);
  CellEstimate est;
  for (std::uint64_t k = 0; k < n_trees; ++k) {
    const TreeSample s = sampler.sample(priors, rng);
    if (is_honest(s.root_state)) {
      ++est.honest_roots;
      if (s.verdict) ++est.honest_accepted;
    } else {
      ++est.dishonest_roots;
      if (!s.verdict) ++est.dishonest_rejected;
    }
  }
  est.reliability = metrics::conditional_rate(est.honest_accepted, est.honest_roots);
  est.security = metrics::conditional_rate(est.dishonest_rejected, est.dishonest_roots);
  return est;
}

CellEstimate estimate_cell(const TPoPParams& params, const StatePriors& priors,
                           std::uint64_t n_trees, std::uint64_t seed) {
  TreeSampler sampler(params);
  return estimate_cell(sampler, priors, n_trees, seed);
}

ExactCell exact_cell(const TPoPParams& params, const StatePriors& priors) {
  priors.validate();
  const std::uint64_t size = tree_size(params);
  if (size > kMaxExactTreeSize) {
    throw InvalidInput(fmt::format("exact enumeration supports at most {} nodes, tree has {}",
                                   kMaxExactTreeSize, size));
  }
  const TreeSampler sampler(params);
  std::array<double, 4> weight{};
  for (NodeState s : kAllStates) weight[static_cast<std::size_t>(s)] = priors.probability(s);

  std::vector<NodeState> states(size, NodeState::HonestFree);
  std::vector<std::uint8_t> digits(size, 0);
  double honest_accept = 0.0;
  double dishonest_reject = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t k = 0; k < size; ++k) {
      states[k] = static_cast<NodeState>(digits[k]);
      w *= weight[digits[k]];
    }
    if (w > 0.0) {
      const bool accepted = sampler.verdict(states);
      if (is_honest(states[0]) && accepted) honest_accept += w;
      if (!is_honest(states[0]) && !accepted) dishonest_reject += w;
    }
    std::size_t k = 0;
    while (k < size && ++digits[k] == 4) digits[k++] = 0;
    if (k == size) break;
  }

  ExactCell out;
  if (priors.p_h > 0.0) out.reliability = std::clamp(honest_accept / priors.p_h, 0.0, 1.0);
  if (priors.p_h < 1.0) out.security = std::clamp(dishonest_reject / (1.0 - priors.p_h), 0.0, 1.0);
  return out;
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
  return derive_seed(master_seed, {0x6D6F64656CULL, cell_index});
}

MapPair sweep_grid(const TPoPParams& params, const SweepOptions& options) {
  using metrics::MapSource;
  using metrics::MetricKind;
  using metrics::PerformanceMap;
  MapPair maps{PerformanceMap::grid(MetricKind::Reliability, MapSource::Model, options.grid_step),
               PerformanceMap::grid(MetricKind::Security, MapSource::Model, options.grid_step)};
  const auto& ph = maps.reliability.ph_axis();
  const auto& pc = maps.reliability.pc_axis();
  const std::size_t cells = maps.reliability.cell_count();

  std::vector<CellEstimate> results(cells);
  parallel_for(cells, options.jobs, [&](std::size_t idx) {
    const StatePriors priors{ph[idx / pc.size()], pc[idx % pc.size()]};
    TreeSampler sampler(params);
    results[idx] =
        estimate_cell(sampler, priors, options.trees_per_cell, cell_seed(options.master_seed, idx));
  });

  for (std::size_t idx = 0; idx < cells; ++idx) {
    const std::size_t i = idx / pc.size();
    const std::size_t j = idx % pc.size();
    maps.reliability.set(i, j, results[idx].reliability, results[idx].honest_roots);
    maps.security.set(i, j, results[idx].security, results[idx].dishonest_roots);
  }
  return maps;
}

}  // namespace tpop::model
