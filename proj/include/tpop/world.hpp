// Agent-based spatial simulator: mobile agents in a bounded rectangle, each
// honest or dishonest and coerced or not, committing a claimed position and
// building neighbour sets from what they can (or choose to) see.

#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tpop/core.hpp"
#include "tpop/graphical_model.hpp"
#include "tpop/metrics.hpp"
#include "tpop/rng.hpp"

namespace tpop::world {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

double distance(Vec2 a, Vec2 b);

struct AgentState {
  AgentId id;
  Vec2 true_pos;
  Vec2 claimed_pos;
  double range_of_sight = 1.0;
  bool honest = true;
  bool coerced = false;
  Vec2 velocity;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct WorldConfig {
  double width = 0.0;
  double height = 0.0;
  std::size_t n_agents = 1000;
  double range_of_sight = 1.0;
  double target_avg_neighbors = 50.0;
  double speed = 0.05;
  model::StatePriors priors{1.0, 0.0};
  std::uint64_t seed = 0;

  /// Square region sized so that n * pi * r^2 / area == target.
  static WorldConfig calibrated(std::size_t n_agents = 1000, double range_of_sight = 1.0,
                                double target_avg_neighbors = 50.0);

  /// n * pi * r^2 / (width * height).
  double expected_neighbors() const;

  /// Throws ConfigError when the density is more than 5% off target or any
  /// field is out of range.
  void validate() const;
};

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Uniform bucket grid over a set of points, used for range queries.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  SpatialIndex(double width, double height, double cell, const std::vector<Vec2>& points);

  /// Calls visit(k) for every point k in a bucket overlapping the disc; the
  /// caller applies the exact distance test.
  template <typename Visit>
  void for_each_near(Vec2 centre, double radius, Visit&& visit) const;

 private:
  std::size_t bucket_of(std::size_t cx, std::size_t cy) const { return cy * nx_ + cx; }
  std::size_t clamp_x(double x) const;
  std::size_t clamp_y(double y) const;

  double cell_ = 1.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::uint32_t> starts_;
  std::vector<std::uint32_t> entries_;
};

class World {
 public:
  /// Places config.n_agents uniformly in the region with iid honesty and
  /// coercion; dishonest agents commit a fake position more than r away.
  static World spawn(const WorldConfig& config);

  /// Hand-built world (ids must be 0..n-1 in order); claimed positions are
  /// taken as given.
  static World from_agents(const WorldConfig& config, std::vector<AgentState> agents);

  const WorldConfig& config() const { return config_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const AgentState& agent(AgentId id) const;
  bool contains(AgentId id) const { return id.value < agents_.size(); }
  std::uint64_t epoch() const { return epoch_; }

  /// Whether `observer` adds `other` to its neighbour set.
  bool sees(AgentId observer, AgentId other) const;

  /// Sorted ids of every agent `observer` sees. Throws InvalidInput for an
  /// unknown id.
  std::vector<AgentId> neighbor_set(AgentId observer) const;

  /// Advance one step with reflection at the walls, then re-commit.
  void advance();

 private:
  World(WorldConfig config, std::vector<AgentState> agents, std::uint64_t rng_seed);

  void commit_fake_positions();
  void rebuild_indices();
  Vec2 reference_point(const AgentState& a) const;
  Vec2 target_point(const AgentState& observer, const AgentState& other) const;
  bool within_sight(const AgentState& observer, const AgentState& other) const;

  WorldConfig config_;
  std::vector<AgentState> agents_;
  std::uint64_t epoch_ = 0;
  Rng rng_;
  double max_range_ = 0.0;
  SpatialIndex true_index_;
  SpatialIndex claimed_index_;
};

World step(World world);

struct ConfusionCounts {
  std::uint64_t honest_accepted = 0;
  std::uint64_t honest_rejected = 0;
  std::uint64_t dishonest_accepted = 0;
  std::uint64_t dishonest_rejected = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o);
  std::uint64_t honest() const { return honest_accepted + honest_rejected; }
  std::uint64_t dishonest() const { return dishonest_accepted + dishonest_rejected; }
  std::optional<double> reliability() const;
  std::optional<double> security() const;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Witness naming and confirmation for one frozen world: candidates are a
/// freshly shuffled copy of the neighbour set on every naming, and a witness
/// confirms a parent iff the parent is in the witness's neighbour set.
class WorldOracle final : public ConfirmationOracle {
 public:
  WorldOracle(const World& world, std::uint64_t seed);

  bool knows(AgentId agent) const override { return world_.contains(agent); }
  std::vector<AgentId> candidate_witnesses(AgentId parent) override;
  bool confirms(AgentId witness, AgentId parent) const override;

 private:
  const World& world_;
  Rng rng_;
  std::unordered_map<std::uint64_t, std::vector<AgentId>> neighbors_;
};

struct EpochResult {
  ConfusionCounts counts;
  std::uint64_t under_filled = 0;
};

/// Every agent proves its position once against the current snapshot.
EpochResult run_epoch(const World& world, const TPoPParams& params, std::uint64_t seed);

struct WorldSweepOptions {
  double grid_step = 0.02;
  std::uint64_t runs_per_cell = 50;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  /// When set, evaluate this one (p_h, p_c) point instead of the grid.
  std::optional<model::StatePriors> single_point;
};

struct CellRuns {
  model::StatePriors priors;
  std::vector<EpochResult> runs;
  EpochResult pooled;
};

struct WorldSweep {
  model::MapPair maps;
  /// p_h-major, matching the maps' cell order.
  std::vector<CellRuns> cells;
};

/// Fresh world per run, one epoch each; counts are pooled per cell.
WorldSweep sweep_world(const WorldConfig& base, const TPoPParams& params,
                       const WorldSweepOptions& options);

/// All runs for one (p_h, p_c) cell.
CellRuns run_cell(const WorldConfig& base, const TPoPParams& params,
                  const model::StatePriors& priors, std::uint64_t runs,
                  std::uint64_t cell_master_seed);

std::uint64_t world_cell_seed(std::uint64_t master_seed, std::size_t cell_index);

template <typename Visit>
void SpatialIndex::for_each_near(Vec2 centre, double radius, Visit&& visit) const {
  if (nx_ == 0) return;
  const std::size_t x0 = clamp_x(centre.x - radius);
  const std::size_t x1 = clamp_x(centre.x + radius);
  const std::size_t y0 = clamp_y(centre.y - radius);
  const std::size_t y1 = clamp_y(centre.y + radius);
  for (std::size_t cy = y0; cy <= y1; ++cy) {
    for (std::size_t cx = x0; cx <= x1; ++cx) {
      const std::size_t b = bucket_of(cx, cy);
      for (std::uint32_t k = starts_[b]; k < starts_[b + 1]; ++k) visit(entries_[k]);
    }
  }
}

}  // namespace tpop::world
