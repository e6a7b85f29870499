#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tpop/metrics.hpp"

namespace tpop::io {

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(Rgb, Rgb) = default;
};

/// Five-stop ramp (dark purple, blue, teal, green, yellow) interpolated
/// linearly; input clamped to [0, 1].
Rgb ramp_color(double v);

inline constexpr Rgb kUndefinedColor{0xCC, 0xCC, 0xCC};

/// Self-contained SVG: p_h on the x axis, p_c on the y axis (increasing
/// upwards), one rect per cell, colour bar on the right. A pure function of
/// the map's values.
std::string render_svg(const metrics::PerformanceMap& map, const std::string& title);

}  // namespace tpop::io
