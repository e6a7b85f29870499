#include "tpop/map_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "tpop/core.hpp"

namespace tpop::io {

void write_csv(std::ostream& out, const metrics::PerformanceMap& map) {
  out << kCsvHeader << '\n';
  for (std::size_t i = 0; i < map.rows(); ++i) {
    for (std::size_t j = 0; j < map.cols(); ++j) {
      const auto& v = map.value(i, j);
      out << fmt::format("{:g},{:g},{},{},{}\n", map.ph_axis()[i], map.pc_axis()[j],
                         v ? fmt::format("{:.10g}", *v) : std::string{}, map.count(i, j),
                         map.low_confidence(i, j) ? 1 : 0);
    }
  }
}

std::string to_csv(const metrics::PerformanceMap& map) {
  std::ostringstream out;
  write_csv(out, map);
  return out.str();
}

namespace {

struct Row {
  double ph;
  double pc;
  std::optional<double> value;
  std::uint64_t count;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(fmt::format("line {}: bad {} '{}'", line_no, what, s));
  }
}

std::uint64_t parse_count(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidInput(fmt::format("line {}: bad count '{}'", line_no, s));
  }
  return v;
}

bool close(double a, double b) { return std::fabs(a - b) <= 1e-9; }

}  // namespace

metrics::PerformanceMap read_csv(std::istream& in, metrics::MetricKind kind,
                                 metrics::MapSource source) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("line 1: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw InvalidInput(fmt::format("line 1: expected header '{}'", kCsvHeader));
  }

  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 5) {
      throw InvalidInput(fmt::format("line {}: expected 5 fields, found {}", line_no, f.size()));
    }
    Row r{parse_double(f[0], line_no, "p_h"), parse_double(f[1], line_no, "p_c"), std::nullopt,
          parse_count(f[3], line_no)};
    if (!f[2].empty()) {
      r.value = parse_double(f[2], line_no, "value");
      if (*r.value < 0.0 || *r.value > 1.0) {
        throw InvalidInput(fmt::format("line {}: value {} outside [0, 1]", line_no, *r.value));
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidInput("no data rows");

  std::vector<double> pc_axis;
  for (const Row& r : rows) {
    if (!close(r.ph, rows.front().ph)) break;
    pc_axis.push_back(r.pc);
  }
  if (rows.size() % pc_axis.size() != 0) {
    throw InvalidInput(fmt::format("{} rows do not form a grid with {} p_c values", rows.size(),
                                   pc_axis.size()));
  }
  std::vector<double> ph_axis;
  for (std::size_t k = 0; k < rows.size(); k += pc_axis.size()) ph_axis.push_back(rows[k].ph);

  double step = 0.0;
  if (ph_axis.size() > 1) step = 1.0 / static_cast<double>(ph_axis.size() - 1);
  metrics::PerformanceMap map(kind, source, step, ph_axis, pc_axis);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = k / pc_axis.size();
    const std::size_t j = k % pc_axis.size();
    if (!close(rows[k].ph, ph_axis[i]) || !close(rows[k].pc, pc_axis[j])) {
      throw InvalidInput(fmt::format("line {}: ({}, {}) breaks the p_h-major grid order", k + 2,
                                     rows[k].ph, rows[k].pc));
    }
    map.set(i, j, rows[k].value, rows[k].count);
  }
  return map;
}

metrics::PerformanceMap load_csv(const std::filesystem::path& path, metrics::MetricKind kind,
                                 metrics::MapSource source) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(fmt::format("cannot open {}", path.string()));
  try {
    return read_csv(in, kind, source);
  } catch (const InvalidInput& e) {
    throw InvalidInput(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp));
    out << text;
    if (!out.flush()) throw std::runtime_error(fmt::format("cannot write {}", tmp));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tpop::io
