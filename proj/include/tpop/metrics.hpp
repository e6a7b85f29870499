// Performance maps over the (p_h, p_c) grid and the Jensen-Shannon
// comparisons between model and simulation maps.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tpop::metrics {

enum class MetricKind { Reliability, Security };
enum class MapSource { Model, Simulation, Divergence };

std::string to_string(MetricKind kind);
std::string to_string(MapSource source);

/// Conditioning sets smaller than this are flagged low-confidence.
inline constexpr std::uint64_t kLowConfidenceCount = 30;

/// successes / trials, empty when trials == 0. Throws InvalidInput when
/// successes > trials.
std::optional<double> conditional_rate(std::uint64_t successes, std::uint64_t trials);

/// Values indexed by (p_h, p_c). A full grid with step s has 1/s + 1 points
/// per axis; single-point maps carry one-element axes.
class PerformanceMap {
 public:
  PerformanceMap(MetricKind kind, MapSource source, double grid_step, std::vector<double> ph_axis,
                 std::vector<double> pc_axis);

  /// Full [0,1]^2 grid. Throws InvalidInput unless 1/step is (close to) an
  /// integer and step is in (0, 1].
  static PerformanceMap grid(MetricKind kind, MapSource source, double grid_step);

  MetricKind kind() const { return kind_; }
  MapSource source() const { return source_; }
  double grid_step() const { return grid_step_; }
  const std::vector<double>& ph_axis() const { return ph_axis_; }
  const std::vector<double>& pc_axis() const { return pc_axis_; }
  std::size_t rows() const { return ph_axis_.size(); }
  std::size_t cols() const { return pc_axis_.size(); }
  std::size_t cell_count() const { return values_.size(); }

  std::size_t index(std::size_t ph_idx, std::size_t pc_idx) const { return ph_idx * cols() + pc_idx; }

  const std::optional<double>& value(std::size_t ph_idx, std::size_t pc_idx) const {
    return values_.at(index(ph_idx, pc_idx));
  }
  std::uint64_t count(std::size_t ph_idx, std::size_t pc_idx) const {
    return counts_.at(index(ph_idx, pc_idx));
  }
  bool low_confidence(std::size_t ph_idx, std::size_t pc_idx) const;

  /// Throws InvalidInput for values outside [0, 1].
  void set(std::size_t ph_idx, std::size_t pc_idx, std::optional<double> value, std::uint64_t count);

  /// Same kind, step and axes.
  bool same_shape(const PerformanceMap& other) const;

  friend bool operator==(const PerformanceMap&, const PerformanceMap&) = default;

 private:
  MetricKind kind_;
  MapSource source_;
  double grid_step_;
  std::vector<double> ph_axis_;
  std::vector<double> pc_axis_;
  std::vector<std::optional<double>> values_;
  std::vector<std::uint64_t> counts_;
};

/// Grid points 0, step, 2*step, ..., 1. Throws InvalidInput when 1/step is
/// not an integer to within 1e-9.
std::vector<double> grid_axis(double grid_step);

/// Base-2 Jensen-Shannon divergence between two pmfs on the same support.
/// Throws InvalidInput on size mismatch, negative mass, or sums off 1 by
/// more than 1e-9.
double jsd(std::span<const double> p, std::span<const double> q);

/// JSD between Bernoulli(a) and Bernoulli(b).
double bernoulli_jsd(double a, double b);

/// Per-cell Bernoulli JSD; undefined wherever either input is undefined.
/// Counts are the smaller of the two inputs' counts.
PerformanceMap pointwise_jsd(const PerformanceMap& a, const PerformanceMap& b);

/// Drops cells undefined in either map, normalizes each map to a pmf and
/// returns their JSD. Throws InvalidInput on shape mismatch, when no cell is
/// defined in both maps, or when either map sums to zero.
double global_jsd(const PerformanceMap& a, const PerformanceMap& b);

}  // namespace tpop::metrics
