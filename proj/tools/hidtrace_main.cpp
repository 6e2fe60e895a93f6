#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hidtrace/detector.hpp"
#include "hidtrace/generator.hpp"
#include "hidtrace/log_codec.hpp"
#include "hidtrace/report.hpp"
#include "hidtrace/timeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hidtrace;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNothingParsed = 2;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  return static_cast<bool>(out);
}

void print_issues(const std::vector<ParseIssue>& issues, std::ostream& os,
                  std::size_t limit = 10) {
  std::size_t shown = 0;
  for (const ParseIssue& issue : issues) {
    if (shown++ == limit) {
      os << "  ... " << issues.size() - limit << " more\n";
      break;
    }
    os << "  offset " << issue.offset << " [" << to_string(issue.kind)
       << "]: " << issue.reason << "\n";
  }
}

FamilySummary family_summary(const ParseReport& report, LogRecordKind kind) {
  FamilySummary s;
  switch (kind) {
    case LogRecordKind::KEY:
      s.events = report.keys.size();
      break;
    case LogRecordKind::PROCESS:
      s.events = static_cast<std::size_t>(
          std::count_if(report.hosts.begin(), report.hosts.end(), [](const HostEvent& h) {
            return h.kind == HostEventKind::PROCESS_START;
          }));
      break;
    case LogRecordKind::IMAGE:
      s.events = static_cast<std::size_t>(
          std::count_if(report.hosts.begin(), report.hosts.end(), [](const HostEvent& h) {
            return h.kind == HostEventKind::IMAGE_LOAD;
          }));
      break;
    case LogRecordKind::PNP:
      s.events = static_cast<std::size_t>(
          std::count_if(report.hosts.begin(), report.hosts.end(), [](const HostEvent& h) {
            return h.kind == HostEventKind::PNP_ATTACH;
          }));
      break;
  }
  s.errors = static_cast<std::size_t>(
      std::count_if(report.errors.begin(), report.errors.end(),
                    [kind](const ParseIssue& i) { return i.kind == kind; }));
  s.records_seen = s.events + s.errors;
  return s;
}

std::vector<std::uint64_t> timeline_key_ticks(const Timeline& tl) {
  std::vector<std::uint64_t> ticks;
  for (const TimelineEntry& e : tl.entries()) {
    if (e.cls == EventClass::KEY) ticks.push_back(e.ticks);
  }
  return ticks;
}

int run_analyze(const std::vector<std::string>& inputs, const std::string& config_path,
                const std::string& format, const std::string& plot_path) {
  DetectionConfig cfg;
  if (!config_path.empty()) {
    try {
      cfg = DetectionConfig::from_file(config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  std::vector<std::string> unique_inputs;
  for (const std::string& p : inputs) {
    if (std::find(unique_inputs.begin(), unique_inputs.end(), p) == unique_inputs.end()) {
      unique_inputs.push_back(p);
    }
  }

  ParseReport merged;
  for (const std::string& p : unique_inputs) {
    auto content = read_file(p);
    if (!content) {
      std::cerr << "error: cannot open " << p << "\n";
      return kExitUsage;
    }
    merged.merge(parse_log(*content));
  }

  AnalysisReport report;
  report.keys = family_summary(merged, LogRecordKind::KEY);
  report.processes = family_summary(merged, LogRecordKind::PROCESS);
  report.images = family_summary(merged, LogRecordKind::IMAGE);
  report.pnp = family_summary(merged, LogRecordKind::PNP);
  report.config_echo = cfg;

  Timeline tl = build_timeline(merged.keys, merged.hosts);
  report.unplaced_count = tl.unplaced().size();
  report.findings = correlate(tl, cfg);

  std::cout << render_report(report, format == "structured" ? ReportFormat::STRUCTURED
                                                            : ReportFormat::TEXT);

  if (!plot_path.empty()) {
    RateSeries series = keystroke_rate_series(timeline_key_ticks(tl), cfg);
    PlotFormat pf;
    if (plot_path.ends_with(".csv")) {
      pf = PlotFormat::CSV;
    } else if (plot_path.ends_with(".svg")) {
      pf = PlotFormat::SVG;
    } else {
      std::cerr << "error: --plot path must end in .csv or .svg\n";
      return kExitUsage;
    }
    if (!write_file(plot_path, emit_rate_plot(series, pf))) {
      std::cerr << "error: cannot write " << plot_path << "\n";
      return kExitUsage;
    }
  }

  if (!merged.errors.empty()) {
    std::cerr << "warning: " << merged.errors.size() << " record(s) failed to parse\n";
    print_issues(merged.errors, std::cerr);
    if (merged.event_count() == 0) return kExitNothingParsed;
  }
  return kExitOk;
}

int run_generate(const std::string& scenario_path, const std::string& out_dir) {
  ScenarioLogs logs;
  try {
    logs = synthesize_scenario(load_scenario(scenario_path));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << out_dir << ": " << ec.message() << "\n";
    return kExitUsage;
  }
  const fs::path dir(out_dir);
  for (const auto& [name, content] :
       {std::pair<const char*, const std::string*>{"keystrokes.log", &logs.keys},
        {"processes.log", &logs.processes},
        {"images.log", &logs.images},
        {"pnp.log", &logs.pnp}}) {
    const fs::path path = dir / name;
    if (!write_file(path, *content)) {
      std::cerr << "error: cannot write " << path.string() << "\n";
      return kExitUsage;
    }
    std::cout << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

int run_plot(const std::string& keys_path, double window, double stride,
             const std::string& format, const std::string& out_path) {
  auto content = read_file(keys_path);
  if (!content) {
    std::cerr << "error: cannot open " << keys_path << "\n";
    return kExitUsage;
  }
  ParseReport report = parse_log(*content);

  DetectionConfig cfg;
  cfg.window_seconds = window;
  cfg.stride_seconds = stride;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  // Keys on one clock only: absolute when available, else raw-relative.
  std::vector<std::uint64_t> abs_ticks, raw_ticks;
  for (const KeystrokeEvent& k : report.keys) {
    if (k.time.domain == TimeDomain::ABSOLUTE) abs_ticks.push_back(k.time.ticks);
    if (k.time.domain == TimeDomain::RAW_RELATIVE) raw_ticks.push_back(k.time.ticks);
  }
  std::vector<std::uint64_t>& ticks = abs_ticks.empty() ? raw_ticks : abs_ticks;
  std::sort(ticks.begin(), ticks.end());

  const RateSeries series = keystroke_rate_series(std::move(ticks), cfg);
  const std::string rendered = emit_rate_plot(
      series, format == "svg" ? PlotFormat::SVG : PlotFormat::CSV);
  if (out_path.empty()) {
    std::cout << rendered;
  } else if (!write_file(out_path, rendered)) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }

  if (!report.errors.empty()) {
    std::cerr << "warning: " << report.errors.size() << " record(s) failed to parse\n";
    print_issues(report.errors, std::cerr);
    if (report.event_count() == 0) return kExitNothingParsed;
  }
  return kExitOk;
}

int run_parse_check(const std::string& file_path, const std::string& kind_name) {
  auto content = read_file(file_path);
  if (!content) {
    std::cerr << "error: cannot open " << file_path << "\n";
    return kExitUsage;
  }
  std::optional<LogRecordKind> expected;
  if (kind_name != "any") {
    expected = record_kind_from_name(kind_name);
    if (!expected) {
      std::cerr << "error: --kind must be key, process, image, pnp, or any\n";
      return kExitUsage;
    }
  }

  const ParseReport report = parse_log(*content, expected);
  std::cout << file_path << ": " << report.records_seen << " record(s), "
            << report.event_count() << " parsed, " << report.errors.size()
            << " error(s), " << report.bytes_skipped << " byte(s) outside records\n";
  if (!report.errors.empty()) {
    print_issues(report.errors, std::cout, 25);
    return report.event_count() == 0 ? kExitNothingParsed : kExitOk;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BadUSB keystroke-injection forensics over host telemetry logs"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand(
      "analyze", "Parse logs, correlate the timeline, and report findings");
  std::string keys_path, procs_path, images_path, pnp_path;
  std::string config_path, format = "text", plot_path;
  analyze->add_option("--keys", keys_path, "keystroke log file");
  analyze->add_option("--procs", procs_path, "process-start log file");
  analyze->add_option("--images", images_path, "image-load log file");
  analyze->add_option("--pnp", pnp_path, "PnP attach log file");
  analyze->add_option("--config", config_path, "key=value detection config file");
  analyze->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "structured"}));
  analyze->add_option("--plot", plot_path, "write a rate plot (.csv or .svg)");

  auto* generate = app.add_subcommand(
      "generate", "Synthesize the four log families from a scenario file");
  std::string scenario_path, out_dir;
  generate->add_option("--scenario", scenario_path, "scenario file")->required();
  generate->add_option("--out-dir", out_dir, "output directory")->required();

  auto* plot = app.add_subcommand("plot", "Emit a keystroke-rate plot from a key log");
  std::string plot_keys, plot_format = "csv", plot_out;
  double window = 1.0, stride = 0.25;
  plot->add_option("--keys", plot_keys, "keystroke log file")->required();
  plot->add_option("--window", window, "window seconds");
  plot->add_option("--stride", stride, "stride seconds");
  plot->add_option("--format", plot_format, "plot format")
      ->check(CLI::IsMember({"csv", "svg"}));
  plot->add_option("--out", plot_out, "output path (default stdout)");

  auto* parse_check = app.add_subcommand("parse-check", "Validate a log file");
  std::string check_file, check_kind = "any";
  parse_check->add_option("--file", check_file, "log file")->required();
  parse_check->add_option("--kind", check_kind, "expected record kind")
      ->check(CLI::IsMember({"key", "process", "image", "pnp", "any"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (analyze->parsed()) {
      std::vector<std::string> inputs;
      for (const std::string& p : {keys_path, procs_path, images_path, pnp_path}) {
        if (!p.empty()) inputs.push_back(p);
      }
      if (inputs.empty()) {
        std::cerr << "error: analyze needs at least one of --keys/--procs/--images/--pnp\n";
        return kExitUsage;
      }
      return run_analyze(inputs, config_path, format, plot_path);
    }
    if (generate->parsed()) return run_generate(scenario_path, out_dir);
    if (plot->parsed()) return run_plot(plot_keys, window, stride, plot_format, plot_out);
    if (parse_check->parsed()) return run_parse_check(check_file, check_kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
