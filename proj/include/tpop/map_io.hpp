// CSV form of a PerformanceMap:
//
//   p_h,p_c,value,count,low_confidence
//   0,0,0.5,2500,0
//
// Rows run p_h-major, p_c-minor. An undefined value is an empty field.
// low_confidence is 1 when count is below kLowConfidenceCount. UTF-8, LF.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tpop/metrics.hpp"

namespace tpop::io {

inline constexpr const char* kCsvHeader = "p_h,p_c,value,count,low_confidence";

void write_csv(std::ostream& out, const metrics::PerformanceMap& map);
std::string to_csv(const metrics::PerformanceMap& map);

/// Throws InvalidInput naming the offending line on malformed input or rows
/// that do not form a complete p_h-major grid.
metrics::PerformanceMap read_csv(std::istream& in, metrics::MetricKind kind,
                                 metrics::MapSource source);

metrics::PerformanceMap load_csv(const std::filesystem::path& path, metrics::MetricKind kind,
                                 metrics::MapSource source);

/// Writes via a temporary file in the same directory, then renames.
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tpop::io
