#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "hidtrace/detector.hpp"
#include "hidtrace/log_codec.hpp"

namespace hidtrace {

struct FamilySummary {
  std::size_t records_seen = 0;
  std::size_t events = 0;
  std::size_t errors = 0;

  bool operator==(const FamilySummary&) const = default;
};

struct AnalysisReport {
  std::vector<Finding> findings;  // sorted by burst start
  FamilySummary keys;
  FamilySummary processes;
  FamilySummary images;
  FamilySummary pnp;
  std::size_t unplaced_count = 0;
  DetectionConfig config_echo;

  bool operator==(const AnalysisReport&) const = default;
};

enum class ReportFormat { TEXT, STRUCTURED };

// TEXT is an investigator-ordered narrative (device, driver, burst,
// processes) with UTC timestamps; STRUCTURED is versioned JSON that
// round-trips through ingest_report. Both render byte-identically for
// equal reports.
std::string render_report(const AnalysisReport& report, ReportFormat format);

// Parses STRUCTURED output back; throws ParseError on malformed documents
// or unsupported format_version.
AnalysisReport ingest_report(std::string_view structured);

enum class PlotFormat { CSV, SVG };

// CSV: "window_start_utc,count,rate" rows. SVG: one rate-vs-time polyline
// in a fixed 1000x400 viewport. Deterministic byte output.
std::string emit_rate_plot(const RateSeries& series, PlotFormat format);

}  // namespace hidtrace
