#include "hidtrace/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace hidtrace {

namespace {

using nlohmann::json;

constexpr int kReportFormatVersion = 1;

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Plot/report time column: calendar text for FILETIME-range ticks, raw
// digits for anything on a relative clock.
std::string time_text(std::uint64_t ticks) {
  if (ticks >= kAbsoluteMagnitudeFloor) return ticks_to_utc(ticks);
  return std::to_string(ticks);
}

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out.empty() ? "(none)" : out;
}

void render_evidence_group(std::ostringstream& os, const Finding& f, Indicator ind,
                           std::string_view label) {
  for (const EvidenceRef& ev : f.evidence) {
    if (ev.indicator != ind) continue;
    os << "    " << time_text(ev.ticks) << "  " << label << "  " << ev.detail << "\n";
  }
}

json config_to_json(const DetectionConfig& cfg) {
  json j;
  j["burst_rate_threshold"] = cfg.burst_rate_threshold;
  j["burst_min_keys"] = cfg.burst_min_keys;
  j["window_seconds"] = cfg.window_seconds;
  j["stride_seconds"] = cfg.stride_seconds;
  j["correlation_window_seconds"] = cfg.correlation_window_seconds;
  j["suspicious_process_names"] = cfg.suspicious_process_names;
  j["hid_driver_names"] = cfg.hid_driver_names;
  j["vendor_watchlist"] = cfg.vendor_watchlist;
  auto pairs = json::array();
  for (const auto& [vid, pid] : cfg.vid_pid_watchlist) {
    pairs.push_back(json::array({vid, pid}));
  }
  j["vid_pid_watchlist"] = pairs;
  j["lock_spam_min_count"] = cfg.lock_spam_min_count;
  j["lock_spam_max_gap_seconds"] = cfg.lock_spam_max_gap_seconds;
  j["sleep_gap_seconds"] = cfg.sleep_gap_seconds;
  return j;
}

DetectionConfig config_from_json(const json& j) {
  DetectionConfig cfg;
  cfg.burst_rate_threshold = j.at("burst_rate_threshold").get<double>();
  cfg.burst_min_keys = j.at("burst_min_keys").get<std::size_t>();
  cfg.window_seconds = j.at("window_seconds").get<double>();
  cfg.stride_seconds = j.at("stride_seconds").get<double>();
  cfg.correlation_window_seconds = j.at("correlation_window_seconds").get<double>();
  cfg.suspicious_process_names = j.at("suspicious_process_names").get<std::set<std::string>>();
  cfg.hid_driver_names = j.at("hid_driver_names").get<std::set<std::string>>();
  cfg.vendor_watchlist = j.at("vendor_watchlist").get<std::set<std::string>>();
  cfg.vid_pid_watchlist.clear();
  for (const auto& pair : j.at("vid_pid_watchlist")) {
    cfg.vid_pid_watchlist.emplace(pair.at(0).get<std::uint16_t>(),
                                  pair.at(1).get<std::uint16_t>());
  }
  cfg.lock_spam_min_count = j.at("lock_spam_min_count").get<std::size_t>();
  cfg.lock_spam_max_gap_seconds = j.at("lock_spam_max_gap_seconds").get<double>();
  cfg.sleep_gap_seconds = j.at("sleep_gap_seconds").get<double>();
  return cfg;
}

json summary_to_json(const FamilySummary& s) {
  return json{{"records_seen", s.records_seen}, {"events", s.events}, {"errors", s.errors}};
}

FamilySummary summary_from_json(const json& j) {
  FamilySummary s;
  s.records_seen = j.at("records_seen").get<std::size_t>();
  s.events = j.at("events").get<std::size_t>();
  s.errors = j.at("errors").get<std::size_t>();
  return s;
}

std::string render_text(const AnalysisReport& r) {
  std::ostringstream os;
  os << "keystroke-injection analysis\n";
  os << "============================\n";
  os << "records: keys " << r.keys.events << "/" << r.keys.records_seen
     << ", processes " << r.processes.events << "/" << r.processes.records_seen
     << ", images " << r.images.events << "/" << r.images.records_seen
     << ", pnp " << r.pnp.events << "/" << r.pnp.records_seen << "\n";
  const std::size_t total_errors =
      r.keys.errors + r.processes.errors + r.images.errors + r.pnp.errors;
  os << "parse errors: " << total_errors << "\n";
  os << "events off the absolute timeline: " << r.unplaced_count << "\n";
  const DetectionConfig& c = r.config_echo;
  os << "config: burst>=" << fmt_g(c.burst_rate_threshold) << " keys/s over >="
     << c.burst_min_keys << " keys, window " << fmt_g(c.window_seconds)
     << " s, stride " << fmt_g(c.stride_seconds) << " s, correlation +/- "
     << fmt_g(c.correlation_window_seconds) << " s\n";
  os << "config: lock spam >=" << c.lock_spam_min_count << " within "
     << fmt_g(c.lock_spam_max_gap_seconds) << " s gaps, sleep gap > "
     << fmt_g(c.sleep_gap_seconds) << " s\n";
  os << "config: suspicious processes: " << join(c.suspicious_process_names) << "\n";
  os << "config: hid drivers: " << join(c.hid_driver_names) << "\n";
  os << "config: vendor watchlist: " << join(c.vendor_watchlist) << "\n";
  os << "\n";

  if (r.findings.empty()) {
    os << "no findings\n";
    return os.str();
  }

  os << r.findings.size() << (r.findings.size() == 1 ? " finding\n" : " findings\n");
  std::size_t n = 0;
  for (const Finding& f : r.findings) {
    ++n;
    os << "\nfinding " << n << ": severity " << to_string(f.severity) << " ("
       << f.indicators.size() << (f.indicators.size() == 1 ? " indicator class"
                                                           : " indicator classes")
       << ")\n";
    render_evidence_group(os, f, Indicator::PNP_DEVICE, "device attach");
    render_evidence_group(os, f, Indicator::VENDOR_WATCHLIST, "vendor watchlist hit");
    render_evidence_group(os, f, Indicator::HID_DRIVER_LOAD, "hid driver load");
    os << "    " << time_text(f.burst.start) << "  keystroke burst  "
       << f.burst.key_count << " keys to " << time_text(f.burst.end) << ", peak "
       << fmt_g(f.burst.peak_rate) << " keys/s\n";
    render_evidence_group(os, f, Indicator::SUSPICIOUS_PROCESS, "suspicious process");
    render_evidence_group(os, f, Indicator::LOCK_KEY_ABUSE, "lock-key abuse");
    render_evidence_group(os, f, Indicator::SLEEP_ANOMALY, "keystroke sleep");
  }
  return os.str();
}

json report_to_json(const AnalysisReport& r) {
  json j;
  j["format_version"] = kReportFormatVersion;
  auto findings = json::array();
  for (const Finding& f : r.findings) {
    json jf;
    jf["burst"] = {{"start_ticks", f.burst.start},
                   {"end_ticks", f.burst.end},
                   {"key_count", f.burst.key_count},
                   {"peak_rate", f.burst.peak_rate}};
    jf["severity"] = to_string(f.severity);
    auto indicators = json::array();
    for (Indicator i : f.indicators) indicators.push_back(to_string(i));
    jf["indicators"] = indicators;
    auto evidence = json::array();
    for (const EvidenceRef& ev : f.evidence) {
      evidence.push_back({{"indicator", to_string(ev.indicator)},
                          {"entry_index", ev.entry_index},
                          {"ticks", ev.ticks},
                          {"class", to_string(ev.cls)},
                          {"detail", ev.detail}});
    }
    jf["evidence"] = evidence;
    findings.push_back(jf);
  }
  j["findings"] = findings;
  j["parse_summary"] = {{"keys", summary_to_json(r.keys)},
                        {"processes", summary_to_json(r.processes)},
                        {"images", summary_to_json(r.images)},
                        {"pnp", summary_to_json(r.pnp)}};
  j["unplaced_count"] = r.unplaced_count;
  j["config"] = config_to_json(r.config_echo);
  return j;
}

Indicator indicator_or_throw(const json& j) {
  auto ind = indicator_from_name(j.get<std::string>());
  if (!ind) throw ParseError("report: unknown indicator " + j.get<std::string>());
  return *ind;
}

EventClass class_or_throw(const std::string& name) {
  for (EventClass c : {EventClass::PNP_ATTACH, EventClass::IMAGE_LOAD,
                       EventClass::PROCESS_START, EventClass::KEY}) {
    if (to_string(c) == name) return c;
  }
  throw ParseError("report: unknown event class " + name);
}

}  // namespace

std::string render_report(const AnalysisReport& report, ReportFormat format) {
  if (format == ReportFormat::TEXT) return render_text(report);
  return report_to_json(report).dump(2) + "\n";
}

AnalysisReport ingest_report(std::string_view structured) {
  json j;
  try {
    j = json::parse(structured);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kReportFormatVersion) {
      throw ParseError("report: unsupported format_version");
    }
    AnalysisReport r;
    for (const auto& jf : j.at("findings")) {
      Finding f;
      const auto& burst = jf.at("burst");
      f.burst.start = burst.at("start_ticks").get<std::uint64_t>();
      f.burst.end = burst.at("end_ticks").get<std::uint64_t>();
      f.burst.key_count = burst.at("key_count").get<std::size_t>();
      f.burst.peak_rate = burst.at("peak_rate").get<double>();
      auto sev = severity_from_name(jf.at("severity").get<std::string>());
      if (!sev) throw ParseError("report: unknown severity");
      f.severity = *sev;
      for (const auto& ji : jf.at("indicators")) f.indicators.insert(indicator_or_throw(ji));
      for (const auto& je : jf.at("evidence")) {
        EvidenceRef ev;
        ev.indicator = indicator_or_throw(je.at("indicator"));
        ev.entry_index = je.at("entry_index").get<std::size_t>();
        ev.ticks = je.at("ticks").get<std::uint64_t>();
        ev.cls = class_or_throw(je.at("class").get<std::string>());
        ev.detail = je.at("detail").get<std::string>();
        f.evidence.push_back(std::move(ev));
      }
      r.findings.push_back(std::move(f));
    }
    const auto& summary = j.at("parse_summary");
    r.keys = summary_from_json(summary.at("keys"));
    r.processes = summary_from_json(summary.at("processes"));
    r.images = summary_from_json(summary.at("images"));
    r.pnp = summary_from_json(summary.at("pnp"));
    r.unplaced_count = j.at("unplaced_count").get<std::size_t>();
    r.config_echo = config_from_json(j.at("config"));
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: missing or mistyped field: ") + e.what());
  }
}

std::string emit_rate_plot(const RateSeries& series, PlotFormat format) {
  if (format == PlotFormat::CSV) {
    std::string out = "window_start_utc,count,rate\n";
    for (const RatePoint& p : series.points) {
      out += time_text(p.window_start);
      out += ',';
      out += std::to_string(p.count);
      out += ',';
      out += fmt_fixed(p.rate, 3);
      out += '\n';
    }
    return out;
  }

  // Fixed 1000x400 viewport, one polyline of rate vs time.
  constexpr double kWidth = 1000, kHeight = 400;
  constexpr double kLeft = 70, kRight = 980, kTop = 20, kBottom = 350;

  double max_rate = 0.0;
  for (const RatePoint& p : series.points) max_rate = std::max(max_rate, p.rate);
  const double y_span = max_rate > 0.0 ? max_rate : 1.0;
  const std::uint64_t t0 = series.points.empty() ? 0 : series.points.front().window_start;
  const std::uint64_t t1 = series.points.empty() ? 0 : series.points.back().window_start;
  const double t_span = t1 > t0 ? static_cast<double>(t1 - t0) : 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
     << "\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n";
  os << "  <line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
     << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  os << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
     << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  os << "  <text x=\"10\" y=\"" << kTop + 6 << "\" font-size=\"12\">"
     << fmt_fixed(y_span, 1) << "</text>\n";
  os << "  <text x=\"10\" y=\"" << (kTop + kBottom) / 2
     << "\" font-size=\"12\">keys/s</text>\n";
  if (!series.points.empty()) {
    os << "  <text x=\"" << kLeft << "\" y=\"" << kBottom + 20
       << "\" font-size=\"12\">" << time_text(t0) << "</text>\n";
    os << "  <text x=\"" << kRight - 220 << "\" y=\"" << kBottom + 20
       << "\" font-size=\"12\">" << time_text(t1) << "</text>\n";
  }
  os << "  <text x=\"" << (kLeft + kRight) / 2 - 60 << "\" y=\"" << kBottom + 40
     << "\" font-size=\"12\">window start (stride " << fmt_g(series.stride_seconds)
     << " s)</text>\n";

  os << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (const RatePoint& p : series.points) {
    const double x =
        kLeft + (static_cast<double>(p.window_start - t0) / t_span) * (kRight - kLeft);
    const double y = kBottom - (p.rate / y_span) * (kBottom - kTop);
    if (!first) os << ' ';
    os << fmt_fixed(x, 2) << ',' << fmt_fixed(y, 2);
    first = false;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace hidtrace
