#include "tpop/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tpop/parallel.hpp"

namespace tpop::world {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

WorldConfig WorldConfig::calibrated(std::size_t n_agents, double range_of_sight,
                                    double target_avg_neighbors) {
  WorldConfig c;
  c.n_agents = n_agents;
  c.range_of_sight = range_of_sight;
  c.target_avg_neighbors = target_avg_neighbors;
  const double area = static_cast<double>(n_agents) * std::numbers::pi * range_of_sight *
                      range_of_sight / target_avg_neighbors;
  c.width = std::sqrt(area);
  c.height = c.width;
  return c;
}

double WorldConfig::expected_neighbors() const {
  return static_cast<double>(n_agents) * std::numbers::pi * range_of_sight * range_of_sight /
         (width * height);
}

namespace {

void check_basic_fields(const WorldConfig& c) {
  if (!(c.width > 0.0) || !(c.height > 0.0) || !std::isfinite(c.width) ||
      !std::isfinite(c.height)) {
    throw ConfigError(fmt::format("world size {}x{} must be positive", c.width, c.height));
  }
  if (c.n_agents == 0) throw ConfigError("n_agents must be at least 1");
  if (!(c.range_of_sight > 0.0)) throw ConfigError("range_of_sight must be positive");
  if (!(c.speed >= 0.0) || !std::isfinite(c.speed)) throw ConfigError("speed must be >= 0");
  try {
    c.priors.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void WorldConfig::validate() const {
  check_basic_fields(*this);
  if (!(target_avg_neighbors > 0.0)) throw ConfigError("target_avg_neighbors must be positive");
  const double density = expected_neighbors();
  if (std::fabs(density / target_avg_neighbors - 1.0) > 0.05) {
    throw ConfigError(fmt::format(
        "density calibration: {} agents with r={} in {}x{} give {:.2f} expected neighbours, "
        "target is {} (tolerance 5%)",
        n_agents, range_of_sight, width, height, density, target_avg_neighbors));
  }
}

SpatialIndex::SpatialIndex(double width, double height, double cell,
                           const std::vector<Vec2>& points)
    : cell_(cell) {
  nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width / cell)));
  ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(height / cell)));
  std::vector<std::uint32_t> bucket(points.size());
  starts_.assign(nx_ * ny_ + 1, 0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    bucket[k] = static_cast<std::uint32_t>(bucket_of(clamp_x(points[k].x), clamp_y(points[k].y)));
    ++starts_[bucket[k] + 1];
  }
  for (std::size_t b = 1; b < starts_.size(); ++b) starts_[b] += starts_[b - 1];
  entries_.resize(points.size());
  std::vector<std::uint32_t> fill(starts_.begin(), starts_.end() - 1);
  for (std::size_t k = 0; k < points.size(); ++k) {
    entries_[fill[bucket[k]]++] = static_cast<std::uint32_t>(k);
  }
}

std::size_t SpatialIndex::clamp_x(double x) const {
  const double c = std::floor(x / cell_);
  if (!(c > 0.0)) return 0;
  return std::min(nx_ - 1, static_cast<std::size_t>(c));
}

std::size_t SpatialIndex::clamp_y(double y) const {
  const double c = std::floor(y / cell_);
  if (!(c > 0.0)) return 0;
  return std::min(ny_ - 1, static_cast<std::size_t>(c));
}

World::World(WorldConfig config, std::vector<AgentState> agents, std::uint64_t rng_seed)
    : config_(std::move(config)), agents_(std::move(agents)), rng_(rng_seed) {
  for (const auto& a : agents_) max_range_ = std::max(max_range_, a.range_of_sight);
}

World World::spawn(const WorldConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, {0x7370617764ULL}));
  std::vector<AgentState> agents(config.n_agents);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    AgentState& a = agents[k];
    a.id = AgentId{k};
    a.true_pos = {config.width * uniform01(rng), config.height * uniform01(rng)};
    a.claimed_pos = a.true_pos;
    a.range_of_sight = config.range_of_sight;
    a.honest = bernoulli(rng, config.priors.p_h);
    a.coerced = bernoulli(rng, config.priors.p_c);
    const double heading = 2.0 * std::numbers::pi * uniform01(rng);
    a.velocity = {config.speed * std::cos(heading), config.speed * std::sin(heading)};
  }
  World world(config, std::move(agents), derive_seed(config.seed, {0x6D6F7665ULL}));
  world.commit_fake_positions();
  world.rebuild_indices();
  return world;
}

World World::from_agents(const WorldConfig& config, std::vector<AgentState> agents) {
  check_basic_fields(config);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const AgentState& a = agents[k];
    if (a.id.value != k) throw InvalidInput(fmt::format("agent at index {} has id {}", k, a.id.value));
    if (!(a.range_of_sight > 0.0)) throw InvalidInput("range_of_sight must be positive");
    if (a.true_pos.x < 0.0 || a.true_pos.x > config.width || a.true_pos.y < 0.0 ||
        a.true_pos.y > config.height) {
      throw InvalidInput(fmt::format("agent {} lies outside the region", k));
    }
    if (a.honest && a.claimed_pos != a.true_pos) {
      throw InvalidInput(fmt::format("honest agent {} must claim its true position", k));
    }
    if (!a.honest && a.claimed_pos == a.true_pos) {
      throw InvalidInput(fmt::format("dishonest agent {} must claim a false position", k));
    }
  }
  World world(config, std::move(agents), derive_seed(config.seed, {0x6D6F7665ULL}));
  world.rebuild_indices();
  return world;
}

const AgentState& World::agent(AgentId id) const {
  if (!contains(id)) throw InvalidInput(fmt::format("unknown agent {}", id.value));
  return agents_[id.value];
}

void World::commit_fake_positions() {
  constexpr int kMaxDraws = 100000;
  for (auto& a : agents_) {
    if (a.honest) {
      a.claimed_pos = a.true_pos;
      continue;
    }
    int draws = 0;
    do {
      if (++draws > kMaxDraws) {
        throw ConfigError(fmt::format(
            "cannot place a fake position more than r={} from agent {} inside {}x{}",
            a.range_of_sight, a.id.value, config_.width, config_.height));
      }
      a.claimed_pos = {config_.width * uniform01(rng_), config_.height * uniform01(rng_)};
    } while (!(distance(a.claimed_pos, a.true_pos) > a.range_of_sight));
  }
}

void World::rebuild_indices() {
  std::vector<Vec2> truth(agents_.size());
  std::vector<Vec2> claimed(agents_.size());
  for (std::size_t k = 0; k < agents_.size(); ++k) {
    truth[k] = agents_[k].true_pos;
    claimed[k] = agents_[k].claimed_pos;
  }
  true_index_ = SpatialIndex(config_.width, config_.height, max_range_, truth);
  claimed_index_ = SpatialIndex(config_.width, config_.height, max_range_, claimed);
}

// A dishonest observer looks around the position it committed to.
Vec2 World::reference_point(const AgentState& a) const {
  return a.honest ? a.true_pos : a.claimed_pos;
}

// A non-coerced observer only accepts true positions; a coerced one takes a
// dishonest agent's fake position at face value.
Vec2 World::target_point(const AgentState& observer, const AgentState& other) const {
  if (!observer.coerced) return other.true_pos;
  return other.honest ? other.true_pos : other.claimed_pos;
}

bool World::sees(AgentId observer, AgentId other) const {
  if (observer == other) return false;
  return within_sight(agent(observer), agent(other));
}

// ||target - reference|| < r, compared squared.
bool World::within_sight(const AgentState& observer, const AgentState& other) const {
  const Vec2 d = target_point(observer, other) - reference_point(observer);
  return d.x * d.x + d.y * d.y < observer.range_of_sight * observer.range_of_sight;
}

std::vector<AgentId> World::neighbor_set(AgentId observer) const {
  const AgentState& a = agent(observer);
  const Vec2 centre = reference_point(a);
  const SpatialIndex& index = a.coerced ? claimed_index_ : true_index_;
  std::vector<AgentId> out;
  index.for_each_near(centre, a.range_of_sight, [&](std::uint32_t k) {
    if (k != observer.value && within_sight(a, agents_[k])) out.push_back(AgentId{k});
  });
  std::sort(out.begin(), out.end());
  return out;
}

void World::advance() {
  const double w = config_.width;
  const double h = config_.height;
  auto reflect = [](double& pos, double& vel, double hi) {
    for (int guard = 0; guard < 64 && (pos < 0.0 || pos > hi); ++guard) {
      if (pos < 0.0) {
        pos = -pos;
      } else {
        pos = 2.0 * hi - pos;
      }
      vel = -vel;
    }
    pos = std::clamp(pos, 0.0, hi);
  };
  for (auto& a : agents_) {
    a.true_pos = a.true_pos + a.velocity;
    reflect(a.true_pos.x, a.velocity.x, w);
    reflect(a.true_pos.y, a.velocity.y, h);
  }
  ++epoch_;
  commit_fake_positions();
  rebuild_indices();
}

World step(World world) {
  world.advance();
  return world;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  honest_accepted += o.honest_accepted;
  honest_rejected += o.honest_rejected;
  dishonest_accepted += o.dishonest_accepted;
  dishonest_rejected += o.dishonest_rejected;
  return *this;
}

std::optional<double> ConfusionCounts::reliability() const {
  return metrics::conditional_rate(honest_accepted, honest());
}

std::optional<double> ConfusionCounts::security() const {
  return metrics::conditional_rate(dishonest_rejected, dishonest());
}

WorldOracle::WorldOracle(const World& world, std::uint64_t seed) : world_(world), rng_(seed) {}

std::vector<AgentId> WorldOracle::candidate_witnesses(AgentId parent) {
  auto it = neighbors_.find(parent.value);
  if (it == neighbors_.end()) {
    it = neighbors_.emplace(parent.value, world_.neighbor_set(parent)).first;
  }
  std::vector<AgentId> order = it->second;
  shuffle(order, rng_);
  return order;
}

bool WorldOracle::confirms(AgentId witness, AgentId parent) const {
  return world_.sees(witness, parent);
}

EpochResult run_epoch(const World& world, const TPoPParams& params, std::uint64_t seed) {
  WorldOracle oracle(world, seed);
  EpochResult result;
  for (const AgentState& prover : world.agents()) {
    const WitnessTree tree = build_tree(prover.id, params, oracle);
    if (tree.under_filled) ++result.under_filled;
    const bool accepted = verify(tree, params, oracle).truthful;
    auto& c = result.counts;
    if (prover.honest) {
      ++(accepted ? c.honest_accepted : c.honest_rejected);
    } else {
      ++(accepted ? c.dishonest_accepted : c.dishonest_rejected);
    }
  }
  return result;
}

CellRuns run_cell(const WorldConfig& base, const TPoPParams& params,
                  const model::StatePriors& priors, std::uint64_t runs,
                  std::uint64_t cell_master_seed) {
  if (runs == 0) throw InvalidInput("runs_per_cell must be at least 1");
  CellRuns cell{priors, {}, {}};
  cell.runs.reserve(runs);
  for (std::uint64_t r = 0; r < runs; ++r) {
    WorldConfig cfg = base;
    cfg.priors = priors;
    cfg.seed = derive_seed(cell_master_seed, {r, 0});
    const World world = World::spawn(cfg);
    const EpochResult one = run_epoch(world, params, derive_seed(cell_master_seed, {r, 1}));
    cell.pooled.counts += one.counts;
    cell.pooled.under_filled += one.under_filled;
    cell.runs.push_back(one);
  }
  return cell;
}

std::uint64_t world_cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
  return derive_seed(master_seed, {0x776F726C64ULL, cell_index});
}

WorldSweep sweep_world(const WorldConfig& base, const TPoPParams& params,
                       const WorldSweepOptions& options) {
  using metrics::MapSource;
  using metrics::MetricKind;
  using metrics::PerformanceMap;
  base.validate();

  std::vector<double> ph_axis;
  std::vector<double> pc_axis;
  if (options.single_point) {
    options.single_point->validate();
    ph_axis = {options.single_point->p_h};
    pc_axis = {options.single_point->p_c};
  } else {
    ph_axis = metrics::grid_axis(options.grid_step);
    pc_axis = ph_axis;
  }
  model::MapPair maps{
      PerformanceMap(MetricKind::Reliability, MapSource::Simulation, options.grid_step, ph_axis,
                     pc_axis),
      PerformanceMap(MetricKind::Security, MapSource::Simulation, options.grid_step, ph_axis,
                     pc_axis)};

  const std::size_t cells = maps.reliability.cell_count();
  std::vector<CellRuns> results(cells);
  parallel_for(cells, options.jobs, [&](std::size_t idx) {
    const model::StatePriors priors{ph_axis[idx / pc_axis.size()], pc_axis[idx % pc_axis.size()]};
    results[idx] = run_cell(base, params, priors, options.runs_per_cell,
                            world_cell_seed(options.master_seed, idx));
  });

  for (std::size_t idx = 0; idx < cells; ++idx) {
    const std::size_t i = idx / pc_axis.size();
    const std::size_t j = idx % pc_axis.size();
    const auto& c = results[idx].pooled.counts;
    maps.reliability.set(i, j, c.reliability(), c.honest());
    maps.security.set(i, j, c.security(), c.dishonest());
  }
  return WorldSweep{std::move(maps), std::move(results)};
}

}  // namespace tpop::world
