#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hidtrace/timeline.hpp"

namespace hidtrace {

// Detection thresholds and watchlists. Defaults separate sustained keystroke
// injection from fast human typing (~90 WPM is about 7.5 keys/s) without a
// training corpus; everything is overridable from a key=value file.
struct DetectionConfig {
  double burst_rate_threshold = 10.0;  // keys/second
  std::size_t burst_min_keys = 20;
  double window_seconds = 1.0;
  double stride_seconds = 0.25;
  double correlation_window_seconds = 30.0;
  std::set<std::string> suspicious_process_names = {
      "powershell.exe", "cmd.exe",    "wscript.exe",
      "cscript.exe",    "mshta.exe",  "rundll32.exe"};
  std::set<std::string> hid_driver_names = {"hidusb.sys", "kbdhid.sys", "kbdclass.sys"};
  std::set<std::string> vendor_watchlist = {"ATMEL"};
  std::set<std::pair<std::uint16_t, std::uint16_t>> vid_pid_watchlist;
  std::size_t lock_spam_min_count = 10;
  double lock_spam_max_gap_seconds = 0.5;
  double sleep_gap_seconds = 5.0;

  void validate() const;  // throws std::invalid_argument

  // key=value lines, '#' comments; unknown keys are errors (ParseError).
  static DetectionConfig from_text(std::string_view text);
  static DetectionConfig from_file(const std::filesystem::path& path);

  bool operator==(const DetectionConfig&) const = default;
};

struct RatePoint {
  std::uint64_t window_start = 0;  // ticks
  std::size_t count = 0;
  double rate = 0.0;  // keys/second = count / window_seconds

  bool operator==(const RatePoint&) const = default;
};

// Sliding-window keystroke rates: windows [start, start+window) stepped by
// stride, covering first to last keystroke. Keeps the sorted make-event
// ticks it was computed from so burst key counts stay exact.
struct RateSeries {
  double window_seconds = 1.0;
  double stride_seconds = 0.25;
  std::vector<RatePoint> points;
  std::vector<std::uint64_t> key_ticks;
};

struct BurstInterval {
  std::uint64_t start = 0;  // first hot window start
  std::uint64_t end = 0;    // last hot window end (exclusive bound)
  std::size_t key_count = 0;
  double peak_rate = 0.0;

  bool operator==(const BurstInterval&) const = default;
};

struct LockSpamInterval {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::size_t count = 0;
  std::size_t first_key = 0;  // indices into the analyzed key sequence
  std::size_t last_key = 0;
};

struct SleepGap {
  std::uint64_t start = 0;  // tick of the keystroke before the silence
  std::uint64_t end = 0;    // tick of the keystroke after it
  std::size_t before_key = 0;
  std::size_t after_key = 0;
};

enum class Indicator {
  SUSPICIOUS_PROCESS,
  HID_DRIVER_LOAD,
  PNP_DEVICE,
  VENDOR_WATCHLIST,
  LOCK_KEY_ABUSE,
  SLEEP_ANOMALY,
};

std::string_view to_string(Indicator i);
std::optional<Indicator> indicator_from_name(std::string_view name);

enum class Severity { LOW, MEDIUM, HIGH };

std::string_view to_string(Severity s);
std::optional<Severity> severity_from_name(std::string_view name);

// Confidence compounds across independent evidence classes.
constexpr Severity severity_for(std::size_t indicator_class_count) {
  if (indicator_class_count >= 3) return Severity::HIGH;
  if (indicator_class_count == 2) return Severity::MEDIUM;
  return Severity::LOW;
}

struct EvidenceRef {
  Indicator indicator = Indicator::PNP_DEVICE;
  std::size_t entry_index = 0;  // into Timeline::entries()
  std::uint64_t ticks = 0;
  EventClass cls = EventClass::KEY;
  std::string detail;

  bool operator==(const EvidenceRef&) const = default;
};

struct Finding {
  BurstInterval burst;
  std::set<Indicator> indicators;
  std::vector<EvidenceRef> evidence;
  Severity severity = Severity::LOW;

  bool operator==(const Finding&) const = default;
};

RateSeries keystroke_rate_series(std::span<const KeystrokeEvent> keys,
                                 const DetectionConfig& cfg);
RateSeries keystroke_rate_series(std::vector<std::uint64_t> sorted_ticks,
                                 const DetectionConfig& cfg);

std::vector<BurstInterval> detect_bursts(const RateSeries& series,
                                         const DetectionConfig& cfg);

std::vector<LockSpamInterval> detect_lock_key_abuse(std::span<const KeystrokeEvent> keys,
                                                    const DetectionConfig& cfg);

std::vector<SleepGap> detect_sleep_gaps(std::span<const KeystrokeEvent> keys,
                                        const DetectionConfig& cfg);

// Full correlation pass: bursts from the timeline's keystrokes, then host
// events, lock abuse, and sleep anomalies gathered around each burst, with
// severity assigned per indicator-class count. Findings sorted by burst start.
std::vector<Finding> correlate(const Timeline& tl, const DetectionConfig& cfg);

}  // namespace hidtrace
