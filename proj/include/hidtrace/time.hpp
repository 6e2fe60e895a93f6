#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hidtrace {

// Thrown by all record/token parsers; the message names the offending
// input and the shapes that would have been accepted.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TimeDomain {
  ABSOLUTE,      // FILETIME: 100 ns ticks since 1601-01-01T00:00:00 UTC
  RAW_RELATIVE,  // counter ticks with no known epoch; never compared to ABSOLUTE
  UNKNOWN,       // record carried no timestamp at all
};

std::string_view to_string(TimeDomain d);

struct NormalizedTime {
  std::uint64_t ticks = 0;
  TimeDomain domain = TimeDomain::UNKNOWN;

  static NormalizedTime absolute(std::uint64_t t) { return {t, TimeDomain::ABSOLUTE}; }
  static NormalizedTime raw_relative(std::uint64_t t) { return {t, TimeDomain::RAW_RELATIVE}; }
  static NormalizedTime unknown() { return {0, TimeDomain::UNKNOWN}; }

  bool operator==(const NormalizedTime&) const = default;
};

inline constexpr std::uint64_t kTicksPerMillisecond = 10'000;
inline constexpr std::uint64_t kTicksPerSecond = 10'000'000;

// All-digit timestamp tokens at or above 10^17 are FILETIME absolutes;
// smaller values are boot-relative counters (the two real populations sit
// eight orders of magnitude apart).
inline constexpr std::uint64_t kAbsoluteMagnitudeFloor = 100'000'000'000'000'000ULL;

// FILETIME ticks at 2000-01-01T00:00:00 UTC. ABSOLUTE events before this
// are treated as suspect and excluded from correlation.
inline constexpr std::uint64_t kYear2000Ticks = 125'911'584'000'000'000ULL;

// Converts whole seconds (possibly fractional) to 100 ns ticks.
std::uint64_t seconds_to_ticks(double seconds);
std::uint64_t milliseconds_to_ticks(double ms);
double ticks_to_seconds(std::uint64_t ticks);

// Accepts either an all-digit tick count (magnitude decides ABSOLUTE vs
// RAW_RELATIVE) or a "YYYY-MM-DD HH:MM:SS.mmm +HH:MM" datetime, which is
// converted to UTC FILETIME ticks. Throws ParseError on anything else.
NormalizedTime normalize_timestamp(std::string_view token);

// Renders an ABSOLUTE time as "YYYY-MM-DD HH:MM:SS.mmm +00:00" (UTC,
// millisecond precision; sub-millisecond ticks truncate). Throws
// std::domain_error for RAW_RELATIVE/UNKNOWN times.
std::string ticks_to_utc(NormalizedTime t);
std::string ticks_to_utc(std::uint64_t ticks);

// Scan code set 1 make codes for CapsLock, NumLock, ScrollLock.
inline constexpr std::uint16_t kScanCapsLock = 0x3A;
inline constexpr std::uint16_t kScanNumLock = 0x45;
inline constexpr std::uint16_t kScanScrollLock = 0x46;

constexpr bool is_lock_scan_code(std::uint16_t make_code) {
  return make_code == kScanCapsLock || make_code == kScanNumLock ||
         make_code == kScanScrollLock;
}

}  // namespace hidtrace
