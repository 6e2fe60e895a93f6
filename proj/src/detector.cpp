#include "hidtrace/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hidtrace {

namespace {

// Burst-neighborhood width used by the sleep-gap rule: a silence only counts
// when both sides show sustained activity within this span.
constexpr double kFlankSeconds = 10.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string_view::npos) comma = value.size();
    auto item = trim(value.substr(pos, comma - pos));
    if (!item.empty()) out.emplace_back(item);
    pos = comma + 1;
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t consumed = 0;
    std::string text(value);
    double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: " + std::string(key) + " expects a number, got \"" +
                     std::string(value) + "\"");
  }
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t v = 0;
  for (char c : value) {
    if (c < '0' || c > '9') {
      throw ParseError("config: " + std::string(key) + " expects a count, got \"" +
                       std::string(value) + "\"");
    }
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  if (value.empty()) {
    throw ParseError("config: " + std::string(key) + " expects a count");
  }
  return v;
}

std::uint16_t parse_hex16(std::string_view key, std::string_view value) {
  if (value.empty() || value.size() > 4) {
    throw ParseError("config: " + std::string(key) + " expects 16-bit hex, got \"" +
                     std::string(value) + "\"");
  }
  std::uint16_t v = 0;
  for (char c : value) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else {
      throw ParseError("config: " + std::string(key) + " expects 16-bit hex, got \"" +
                       std::string(value) + "\"");
    }
    v = static_cast<std::uint16_t>(v * 16 + digit);
  }
  return v;
}

std::set<std::string> lowered_set(std::string_view value) {
  std::set<std::string> out;
  for (auto& item : split_list(value)) out.insert(ascii_lower(item));
  return out;
}

void require_positive(double v, std::string_view name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument("config: " + std::string(name) +
                                " must be strictly positive");
  }
}

std::size_t count_in(const std::vector<std::uint64_t>& sorted, std::uint64_t lo,
                     std::uint64_t hi_exclusive) {
  auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
  auto last = std::lower_bound(sorted.begin(), sorted.end(), hi_exclusive);
  return static_cast<std::size_t>(last - first);
}

std::size_t count_in_closed(const std::vector<std::uint64_t>& sorted, std::uint64_t lo,
                            std::uint64_t hi) {
  auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
  auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
  return static_cast<std::size_t>(last - first);
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  return s < a ? ~std::uint64_t{0} : s;
}

std::uint64_t saturating_sub(std::uint64_t a, std::uint64_t b) {
  return a > b ? a - b : 0;
}

}  // namespace

void DetectionConfig::validate() const {
  require_positive(burst_rate_threshold, "burst_rate_threshold");
  require_positive(window_seconds, "window_seconds");
  require_positive(stride_seconds, "stride_seconds");
  require_positive(correlation_window_seconds, "correlation_window_seconds");
  require_positive(lock_spam_max_gap_seconds, "lock_spam_max_gap_seconds");
  require_positive(sleep_gap_seconds, "sleep_gap_seconds");
  if (burst_min_keys == 0) {
    throw std::invalid_argument("config: burst_min_keys must be strictly positive");
  }
  if (lock_spam_min_count == 0) {
    throw std::invalid_argument("config: lock_spam_min_count must be strictly positive");
  }
  for (const auto* names : {&suspicious_process_names, &hid_driver_names}) {
    for (const auto& n : *names) {
      if (n != ascii_lower(n)) {
        throw std::invalid_argument("config: name sets must be lowercase (got \"" + n +
                                    "\")");
      }
    }
  }
}

DetectionConfig DetectionConfig::from_text(std::string_view text) {
  DetectionConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));

    if (key == "burst_rate_threshold") cfg.burst_rate_threshold = parse_double(key, value);
    else if (key == "burst_min_keys") cfg.burst_min_keys = parse_count(key, value);
    else if (key == "window_seconds") cfg.window_seconds = parse_double(key, value);
    else if (key == "stride_seconds") cfg.stride_seconds = parse_double(key, value);
    else if (key == "correlation_window_seconds")
      cfg.correlation_window_seconds = parse_double(key, value);
    else if (key == "suspicious_process_names")
      cfg.suspicious_process_names = lowered_set(value);
    else if (key == "hid_driver_names") cfg.hid_driver_names = lowered_set(value);
    else if (key == "vendor_watchlist") {
      cfg.vendor_watchlist.clear();
      for (auto& item : split_list(value)) cfg.vendor_watchlist.insert(item);
    } else if (key == "vid_pid_watchlist") {
      cfg.vid_pid_watchlist.clear();
      for (auto& item : split_list(value)) {
        std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
          throw ParseError("config: vid_pid_watchlist entries are vid:pid hex pairs");
        }
        cfg.vid_pid_watchlist.emplace(parse_hex16(key, trim(std::string_view(item).substr(0, colon))),
                                      parse_hex16(key, trim(std::string_view(item).substr(colon + 1))));
      }
    } else if (key == "lock_spam_min_count")
      cfg.lock_spam_min_count = parse_count(key, value);
    else if (key == "lock_spam_max_gap_seconds")
      cfg.lock_spam_max_gap_seconds = parse_double(key, value);
    else if (key == "sleep_gap_seconds") cfg.sleep_gap_seconds = parse_double(key, value);
    else {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key \"" +
                       key + "\"");
    }
  }
  cfg.validate();
  return cfg;
}

DetectionConfig DetectionConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::string_view to_string(Indicator i) {
  switch (i) {
    case Indicator::SUSPICIOUS_PROCESS: return "SUSPICIOUS_PROCESS";
    case Indicator::HID_DRIVER_LOAD: return "HID_DRIVER_LOAD";
    case Indicator::PNP_DEVICE: return "PNP_DEVICE";
    case Indicator::VENDOR_WATCHLIST: return "VENDOR_WATCHLIST";
    case Indicator::LOCK_KEY_ABUSE: return "LOCK_KEY_ABUSE";
    case Indicator::SLEEP_ANOMALY: return "SLEEP_ANOMALY";
  }
  return "?";
}

std::optional<Indicator> indicator_from_name(std::string_view name) {
  for (Indicator i : {Indicator::SUSPICIOUS_PROCESS, Indicator::HID_DRIVER_LOAD,
                      Indicator::PNP_DEVICE, Indicator::VENDOR_WATCHLIST,
                      Indicator::LOCK_KEY_ABUSE, Indicator::SLEEP_ANOMALY}) {
    if (to_string(i) == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::LOW: return "LOW";
    case Severity::MEDIUM: return "MEDIUM";
    case Severity::HIGH: return "HIGH";
  }
  return "?";
}

std::optional<Severity> severity_from_name(std::string_view name) {
  for (Severity s : {Severity::LOW, Severity::MEDIUM, Severity::HIGH}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

RateSeries keystroke_rate_series(std::span<const KeystrokeEvent> keys,
                                 const DetectionConfig& cfg) {
  std::vector<std::uint64_t> ticks;
  ticks.reserve(keys.size());
  for (const auto& k : keys) ticks.push_back(k.time.ticks);
  return keystroke_rate_series(std::move(ticks), cfg);
}

RateSeries keystroke_rate_series(std::vector<std::uint64_t> sorted_ticks,
                                 const DetectionConfig& cfg) {
  cfg.validate();
  RateSeries series;
  series.window_seconds = cfg.window_seconds;
  series.stride_seconds = cfg.stride_seconds;
  series.key_ticks = std::move(sorted_ticks);
  if (series.key_ticks.empty()) return series;
  if (!std::is_sorted(series.key_ticks.begin(), series.key_ticks.end())) {
    throw std::invalid_argument("keystroke_rate_series: keys must be sorted by ticks");
  }

  const std::uint64_t window = seconds_to_ticks(cfg.window_seconds);
  const std::uint64_t stride = seconds_to_ticks(cfg.stride_seconds);
  if (window == 0 || stride == 0) {
    throw std::invalid_argument("keystroke_rate_series: window/stride below tick size");
  }

  const std::uint64_t first = series.key_ticks.front();
  const std::uint64_t last = series.key_ticks.back();
  const std::uint64_t steps = (last - first) / stride;
  if (steps > 20'000'000) {
    throw std::invalid_argument(
        "keystroke_rate_series: span/stride would produce too many windows");
  }

  series.points.reserve(steps + 1);
  for (std::uint64_t k = 0; k <= steps; ++k) {
    const std::uint64_t start = first + k * stride;
    const std::size_t n = count_in(series.key_ticks, start, saturating_add(start, window));
    series.points.push_back(
        {start, n, static_cast<double>(n) / cfg.window_seconds});
  }
  return series;
}

std::vector<BurstInterval> detect_bursts(const RateSeries& series,
                                         const DetectionConfig& cfg) {
  const std::uint64_t window = seconds_to_ticks(series.window_seconds);
  std::vector<BurstInterval> merged;

  std::size_t i = 0;
  const auto& pts = series.points;
  while (i < pts.size()) {
    if (pts[i].rate < cfg.burst_rate_threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double peak = pts[i].rate;
    while (j + 1 < pts.size() && pts[j + 1].rate >= cfg.burst_rate_threshold) {
      ++j;
      peak = std::max(peak, pts[j].rate);
    }
    BurstInterval burst;
    burst.start = pts[i].window_start;
    burst.end = saturating_add(pts[j].window_start, window);
    burst.peak_rate = peak;
    // Window width spills past the last hot stride, so nearby runs can
    // produce touching intervals; coalesce them.
    if (!merged.empty() && merged.back().end >= burst.start) {
      merged.back().end = std::max(merged.back().end, burst.end);
      merged.back().peak_rate = std::max(merged.back().peak_rate, burst.peak_rate);
    } else {
      merged.push_back(burst);
    }
    i = j + 1;
  }

  std::vector<BurstInterval> out;
  for (auto& b : merged) {
    b.key_count = count_in(series.key_ticks, b.start, b.end);
    if (b.key_count >= cfg.burst_min_keys) out.push_back(b);
  }
  return out;
}

std::vector<LockSpamInterval> detect_lock_key_abuse(std::span<const KeystrokeEvent> keys,
                                                    const DetectionConfig& cfg) {
  cfg.validate();
  const std::uint64_t max_gap = seconds_to_ticks(cfg.lock_spam_max_gap_seconds);
  std::vector<LockSpamInterval> out;

  std::size_t i = 0;
  while (i < keys.size()) {
    if (!keys[i].is_lock()) {
      ++i;
      continue;
    }
    // Extend over consecutive lock keys whose successive gaps stay small;
    // any interleaved non-lock key breaks the run.
    std::size_t j = i;
    while (j + 1 < keys.size() && keys[j + 1].is_lock() &&
           keys[j + 1].time.ticks - keys[j].time.ticks <= max_gap) {
      ++j;
    }
    const std::size_t run = j - i + 1;
    if (run >= cfg.lock_spam_min_count) {
      out.push_back({keys[i].time.ticks, keys[j].time.ticks, run, i, j});
    }
    i = j + 1;
  }
  return out;
}

std::vector<SleepGap> detect_sleep_gaps(std::span<const KeystrokeEvent> keys,
                                        const DetectionConfig& cfg) {
  cfg.validate();
  std::vector<std::uint64_t> ticks;
  ticks.reserve(keys.size());
  for (const auto& k : keys) ticks.push_back(k.time.ticks);

  const std::uint64_t gap_min = seconds_to_ticks(cfg.sleep_gap_seconds);
  const std::uint64_t flank = seconds_to_ticks(kFlankSeconds);
  std::vector<SleepGap> out;

  for (std::size_t i = 0; i + 1 < ticks.size(); ++i) {
    const std::uint64_t gap = ticks[i + 1] - ticks[i];
    if (gap <= gap_min) continue;
    const std::size_t before =
        count_in_closed(ticks, saturating_sub(ticks[i], flank), ticks[i]);
    const std::size_t after =
        count_in_closed(ticks, ticks[i + 1], saturating_add(ticks[i + 1], flank));
    if (before >= cfg.burst_min_keys && after >= cfg.burst_min_keys) {
      out.push_back({ticks[i], ticks[i + 1], i, i + 1});
    }
  }
  return out;
}

std::vector<Finding> correlate(const Timeline& tl, const DetectionConfig& cfg) {
  cfg.validate();

  std::vector<KeystrokeEvent> keys;
  std::vector<std::size_t> key_entry;
  std::vector<std::uint64_t> key_ticks;
  for (std::size_t i = 0; i < tl.entries().size(); ++i) {
    const auto& entry = tl.entries()[i];
    if (entry.cls != EventClass::KEY) continue;
    keys.push_back(*entry.key());
    key_entry.push_back(i);
    key_ticks.push_back(entry.ticks);
  }

  const RateSeries series = keystroke_rate_series(key_ticks, cfg);
  const auto bursts = detect_bursts(series, cfg);
  const auto lock_runs = detect_lock_key_abuse(keys, cfg);
  const auto sleep_gaps = detect_sleep_gaps(keys, cfg);
  const std::uint64_t corr = seconds_to_ticks(cfg.correlation_window_seconds);

  const bool vendor_watch_empty =
      cfg.vendor_watchlist.empty() && cfg.vid_pid_watchlist.empty();
  std::set<std::string> vendors_lower;
  for (const auto& v : cfg.vendor_watchlist) vendors_lower.insert(ascii_lower(v));

  std::vector<Finding> findings;
  for (const BurstInterval& burst : bursts) {
    const std::uint64_t qt0 = saturating_sub(burst.start, corr);
    const std::uint64_t qt1 = saturating_add(burst.end, corr);

    Finding f;
    f.burst = burst;
    auto add = [&f, &tl](Indicator ind, std::size_t entry_idx, std::string detail) {
      f.indicators.insert(ind);
      const auto& entry = tl.entries()[entry_idx];
      f.evidence.push_back({ind, entry_idx, entry.ticks, entry.cls, std::move(detail)});
    };

    for (std::size_t idx : tl.window_query(qt0, qt1, {EventClass::PNP_ATTACH})) {
      const HostEvent& h = *tl.entries()[idx].host();
      const DeviceInstanceId& dev = *h.device_id;
      add(Indicator::PNP_DEVICE, idx, dev.raw);
      if (!vendor_watch_empty) {
        const bool vendor_hit =
            dev.vendor_string && vendors_lower.contains(ascii_lower(*dev.vendor_string));
        const bool vid_pid_hit =
            dev.vid && dev.pid && cfg.vid_pid_watchlist.contains({*dev.vid, *dev.pid});
        if (vendor_hit || vid_pid_hit) {
          add(Indicator::VENDOR_WATCHLIST, idx,
              vendor_hit ? *dev.vendor_string : dev.raw);
        }
      }
    }
    for (std::size_t idx : tl.window_query(qt0, qt1, {EventClass::IMAGE_LOAD})) {
      const HostEvent& h = *tl.entries()[idx].host();
      std::string base = path_basename_lower(h.path);
      if (cfg.hid_driver_names.contains(base)) {
        add(Indicator::HID_DRIVER_LOAD, idx, std::move(base));
      }
    }
    for (std::size_t idx : tl.window_query(qt0, qt1, {EventClass::PROCESS_START})) {
      const HostEvent& h = *tl.entries()[idx].host();
      std::string base = path_basename_lower(h.path);
      if (cfg.suspicious_process_names.contains(base)) {
        add(Indicator::SUSPICIOUS_PROCESS, idx,
            base + " (pid " + std::to_string(*h.pid) + ")");
      }
    }
    for (const LockSpamInterval& run : lock_runs) {
      if (run.start <= qt1 && run.end >= qt0) {
        add(Indicator::LOCK_KEY_ABUSE, key_entry[run.first_key],
            std::to_string(run.count) + " lock keys in a row");
      }
    }
    for (const SleepGap& gap : sleep_gaps) {
      if (gap.start <= qt1 && gap.end >= qt0) {
        char detail[64];
        std::snprintf(detail, sizeof(detail), "%.3f s keystroke silence",
                      ticks_to_seconds(gap.end - gap.start));
        add(Indicator::SLEEP_ANOMALY, key_entry[gap.before_key], detail);
      }
    }

    f.severity = severity_for(f.indicators.size());
    findings.push_back(std::move(f));
  }
  return findings;
}

}  // namespace hidtrace
