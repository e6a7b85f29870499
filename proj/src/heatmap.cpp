#include "tpop/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tpop::io {

namespace {

constexpr std::array<Rgb, 5> kStops = {{
    {0x44, 0x01, 0x54},
    {0x3B, 0x52, 0x8B},
    {0x21, 0x91, 0x8C},
    {0x5E, 0xC9, 0x62},
    {0xFD, 0xE7, 0x25},
}};

std::string hex(Rgb c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

Rgb ramp_color(double v) {
  if (!std::isfinite(v)) v = 0.0;
  v = std::clamp(v, 0.0, 1.0);
  const double pos = v * static_cast<double>(kStops.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(lo);
  auto mix = [f](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
  };
  const Rgb a = kStops[lo];
  const Rgb b = kStops[lo + 1];
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string render_svg(const metrics::PerformanceMap& map, const std::string& title) {
  constexpr double kPlot = 400.0;
  constexpr double kLeft = 60.0;
  constexpr double kTop = 40.0;
  constexpr double kBarX = kLeft + kPlot + 20.0;
  constexpr double kBarW = 16.0;
  const double width = kBarX + kBarW + 50.0;
  const double height = kTop + kPlot + 50.0;

  const double cw = kPlot / static_cast<double>(map.rows());
  const double ch = kPlot / static_cast<double>(map.cols());

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", width, height);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     kLeft + kPlot / 2.0, escape(title));

  svg += "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < map.rows(); ++i) {
    for (std::size_t j = 0; j < map.cols(); ++j) {
      const auto& v = map.value(i, j);
      const Rgb c = v ? ramp_color(*v) : kUndefinedColor;
      const double x = kLeft + cw * static_cast<double>(i);
      const double y = kTop + kPlot - ch * static_cast<double>(j + 1);
      svg += fmt::format("<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"{}\"/>\n",
                         x, y, cw, ch, hex(c));
    }
  }
  svg += "</g>\n";

  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>\n",
      kLeft, kTop, kPlot, kPlot);
  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    const double x = kLeft + t * kPlot;
    const double y = kTop + kPlot - t * kPlot;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", x,
                       kTop + kPlot + 16.0, t);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n",
                       kLeft - 6.0, y + 4.0, t);
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">p_h</text>\n",
                     kLeft + kPlot / 2.0, kTop + kPlot + 36.0);
  svg += fmt::format(
      "<text x=\"18\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1f})\">"
      "p_c</text>\n",
      kTop + kPlot / 2.0, kTop + kPlot / 2.0);

  constexpr int kBarSteps = 50;
  for (int k = 0; k < kBarSteps; ++k) {
    const double t = (k + 0.5) / kBarSteps;
    const double y = kTop + kPlot - (k + 1) * kPlot / kBarSteps;
    svg += fmt::format("<rect x=\"{}\" y=\"{:.3f}\" width=\"{}\" height=\"{:.3f}\" fill=\"{}\"/>\n",
                       kBarX, y, kBarW, kPlot / kBarSteps, hex(ramp_color(t)));
  }
  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{:g}</text>\n", kBarX + kBarW + 4.0,
                       kTop + kPlot - t * kPlot + 4.0, t);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace tpop::io
