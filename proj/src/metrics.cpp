#include "tpop/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tpop/core.hpp"

namespace tpop::metrics {

std::string to_string(MetricKind kind) {
  return kind == MetricKind::Reliability ? "reliability" : "security";
}

std::string to_string(MapSource source) {
  switch (source) {
    case MapSource::Model:
      return "model";
    case MapSource::Simulation:
      return "simulation";
    case MapSource::Divergence:
      return "divergence";
  }
  return "unknown";
}

std::optional<double> conditional_rate(std::uint64_t successes, std::uint64_t trials) {
  if (successes > trials) {
    throw InvalidInput(fmt::format("{} successes out of {} trials", successes, trials));
  }
  if (trials == 0) return std::nullopt;
  return static_cast<double>(successes) / static_cast<double>(trials);
}

std::vector<double> grid_axis(double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 1.0) {
    throw InvalidInput(fmt::format("grid step {} is outside (0, 1]", grid_step));
  }
  const double steps = 1.0 / grid_step;
  const double rounded = std::round(steps);
  if (std::fabs(steps - rounded) > 1e-9 * rounded) {
    throw InvalidInput(fmt::format("grid step {} does not divide 1 evenly", grid_step));
  }
  const auto n = static_cast<std::size_t>(rounded);
  std::vector<double> axis(n + 1);
  for (std::size_t i = 0; i <= n; ++i) axis[i] = static_cast<double>(i) / static_cast<double>(n);
  return axis;
}

PerformanceMap::PerformanceMap(MetricKind kind, MapSource source, double grid_step,
                               std::vector<double> ph_axis, std::vector<double> pc_axis)
    : kind_(kind),
      source_(source),
      grid_step_(grid_step),
      ph_axis_(std::move(ph_axis)),
      pc_axis_(std::move(pc_axis)),
      values_(ph_axis_.size() * pc_axis_.size()),
      counts_(ph_axis_.size() * pc_axis_.size(), 0) {
  if (ph_axis_.empty() || pc_axis_.empty()) throw InvalidInput("performance map needs both axes");
}

PerformanceMap PerformanceMap::grid(MetricKind kind, MapSource source, double grid_step) {
  auto axis = grid_axis(grid_step);
  return PerformanceMap(kind, source, grid_step, axis, axis);
}

bool PerformanceMap::low_confidence(std::size_t ph_idx, std::size_t pc_idx) const {
  return count(ph_idx, pc_idx) < kLowConfidenceCount;
}

void PerformanceMap::set(std::size_t ph_idx, std::size_t pc_idx, std::optional<double> value,
                         std::uint64_t count) {
  if (value && !(*value >= 0.0 && *value <= 1.0)) {
    throw InvalidInput(fmt::format("map value {} is outside [0, 1]", *value));
  }
  const std::size_t i = index(ph_idx, pc_idx);
  values_.at(i) = value;
  counts_.at(i) = count;
}

bool PerformanceMap::same_shape(const PerformanceMap& other) const {
  return kind_ == other.kind_ && ph_axis_ == other.ph_axis_ && pc_axis_ == other.pc_axis_;
}

namespace {

// p * log2(p / m), with 0 * log 0 = 0.
double kl_term(double p, double m) { return p > 0.0 ? p * std::log2(p / m) : 0.0; }

void check_pmf(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidInput(fmt::format("{} has a negative or non-finite entry", name));
    }
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw InvalidInput(fmt::format("{} sums to {}, not 1", name, total));
  }
}

}  // namespace

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InvalidInput(fmt::format("support sizes differ: {} vs {}", p.size(), q.size()));
  }
  check_pmf(p, "p");
  check_pmf(q, "q");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    kl_p += kl_term(p[i], m);
    kl_q += kl_term(q[i], m);
  }
  const double d = 0.5 * kl_p + 0.5 * kl_q;
  return std::clamp(d, 0.0, 1.0);
}

double bernoulli_jsd(double a, double b) {
  const double p[2] = {a, 1.0 - a};
  const double q[2] = {b, 1.0 - b};
  return jsd(p, q);
}

PerformanceMap pointwise_jsd(const PerformanceMap& a, const PerformanceMap& b) {
  if (!a.same_shape(b)) throw InvalidInput("pointwise JSD needs maps of the same kind and grid");
  PerformanceMap out(a.kind(), MapSource::Divergence, a.grid_step(), a.ph_axis(), a.pc_axis());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const auto& va = a.value(i, j);
      const auto& vb = b.value(i, j);
      const std::uint64_t n = std::min(a.count(i, j), b.count(i, j));
      if (va && vb) {
        out.set(i, j, bernoulli_jsd(*va, *vb), n);
      } else {
        out.set(i, j, std::nullopt, n);
      }
    }
  }
  return out;
}

double global_jsd(const PerformanceMap& a, const PerformanceMap& b) {
  if (!a.same_shape(b)) throw InvalidInput("global JSD needs maps of the same kind and grid");
  std::vector<double> p;
  std::vector<double> q;
  p.reserve(a.cell_count());
  q.reserve(a.cell_count());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const auto& va = a.value(i, j);
      const auto& vb = b.value(i, j);
      if (va && vb) {
        p.push_back(*va);
        q.push_back(*vb);
      }
    }
  }
  if (p.empty()) throw InvalidInput("no cell is defined in both maps");
  auto normalize = [](std::vector<double>& v, const char* name) {
    double total = 0.0;
    for (double x : v) total += x;
    if (!(total > 0.0)) throw InvalidInput(fmt::format("{} map sums to zero", name));
    for (double& x : v) x /= total;
  };
  normalize(p, "first");
  normalize(q, "second");
  return jsd(p, q);
}

}  // namespace tpop::metrics
