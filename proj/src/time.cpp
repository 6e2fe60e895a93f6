#include "hidtrace/time.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

namespace hidtrace {

namespace {

constexpr std::int64_t kMillisPerDay = 86'400'000;

// Days from 1601-01-01 to the civil date, via std::chrono's proleptic
// Gregorian calendar. Returns nullopt when the date is not a real one.
std::optional<std::int64_t> days_since_1601(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  if (year < 1601 || year > 30000) return std::nullopt;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                     std::chrono::day{day}};
  if (!ymd.ok()) return std::nullopt;
  constexpr sys_days epoch{std::chrono::year{1601} / 1 / 1};
  return (sys_days{ymd} - epoch).count();
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool take_digits(std::string_view s, std::size_t& pos, std::size_t n, unsigned& out) {
  if (pos + n > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  pos += n;
  return true;
}

bool take_char(std::string_view s, std::size_t& pos, char expected) {
  if (pos >= s.size() || s[pos] != expected) return false;
  ++pos;
  return true;
}

struct DatetimeParts {
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0, milli = 0;
  int offset_minutes = 0;
  std::size_t length = 0;  // characters consumed
};

// Matches "YYYY-MM-DD HH:MM:SS.mmm +HH:MM" at the front of [s]. The year
// may run 4..6 digits so renders of far-future ticks stay round-trippable.
std::optional<DatetimeParts> match_datetime_prefix(std::string_view s) {
  DatetimeParts p;
  std::size_t pos = 0;

  std::size_t year_digits = 0;
  long year = 0;
  while (pos + year_digits < s.size() && year_digits < 6 &&
         s[pos + year_digits] >= '0' && s[pos + year_digits] <= '9') {
    year = year * 10 + (s[pos + year_digits] - '0');
    ++year_digits;
  }
  if (year_digits < 4) return std::nullopt;
  pos += year_digits;
  p.year = static_cast<int>(year);

  if (!take_char(s, pos, '-') || !take_digits(s, pos, 2, p.month) ||
      !take_char(s, pos, '-') || !take_digits(s, pos, 2, p.day) ||
      !take_char(s, pos, ' ') || !take_digits(s, pos, 2, p.hour) ||
      !take_char(s, pos, ':') || !take_digits(s, pos, 2, p.minute) ||
      !take_char(s, pos, ':') || !take_digits(s, pos, 2, p.second) ||
      !take_char(s, pos, '.') || !take_digits(s, pos, 3, p.milli) ||
      !take_char(s, pos, ' ')) {
    return std::nullopt;
  }

  if (pos >= s.size() || (s[pos] != '+' && s[pos] != '-')) return std::nullopt;
  const int sign = s[pos] == '-' ? -1 : 1;
  ++pos;
  unsigned oh = 0, om = 0;
  if (!take_digits(s, pos, 2, oh) || !take_char(s, pos, ':') ||
      !take_digits(s, pos, 2, om)) {
    return std::nullopt;
  }
  if (p.hour > 23 || p.minute > 59 || p.second > 59 || oh > 23 || om > 59) {
    return std::nullopt;
  }
  p.offset_minutes = sign * static_cast<int>(oh * 60 + om);
  p.length = pos;
  return p;
}

[[noreturn]] void throw_bad_token(std::string_view token, std::string_view why) {
  throw ParseError("bad timestamp \"" + std::string(token) + "\": " + std::string(why) +
                   " (expected an all-digit tick count or "
                   "\"YYYY-MM-DD HH:MM:SS.mmm +HH:MM\")");
}

}  // namespace

std::string_view to_string(TimeDomain d) {
  switch (d) {
    case TimeDomain::ABSOLUTE: return "ABSOLUTE";
    case TimeDomain::RAW_RELATIVE: return "RAW_RELATIVE";
    case TimeDomain::UNKNOWN: return "UNKNOWN";
  }
  return "?";
}

std::uint64_t seconds_to_ticks(double seconds) {
  return static_cast<std::uint64_t>(std::llround(seconds * 1e7));
}

std::uint64_t milliseconds_to_ticks(double ms) {
  return static_cast<std::uint64_t>(std::llround(ms * 1e4));
}

double ticks_to_seconds(std::uint64_t ticks) {
  return static_cast<double>(ticks) / 1e7;
}

NormalizedTime normalize_timestamp(std::string_view token) {
  if (token.empty()) throw_bad_token(token, "empty token");

  if (all_digits(token)) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw_bad_token(token, "tick count does not fit in 64 bits");
    }
    return value >= kAbsoluteMagnitudeFloor ? NormalizedTime::absolute(value)
                                            : NormalizedTime::raw_relative(value);
  }

  auto dt = match_datetime_prefix(token);
  if (!dt || dt->length != token.size()) {
    throw_bad_token(token, "unrecognized shape");
  }

  auto days = days_since_1601(dt->year, dt->month, dt->day);
  if (!days) throw_bad_token(token, "no such calendar date");

  std::int64_t local_ms = *days * kMillisPerDay +
                          (dt->hour * 3600LL + dt->minute * 60LL + dt->second) * 1000LL +
                          dt->milli;
  // Local time minus the UTC offset gives UTC.
  std::int64_t utc_ms = local_ms - static_cast<std::int64_t>(dt->offset_minutes) * 60'000;
  if (utc_ms < 0) throw_bad_token(token, "instant precedes 1601-01-01 UTC");
  return NormalizedTime::absolute(static_cast<std::uint64_t>(utc_ms) *
                                  kTicksPerMillisecond);
}

std::string ticks_to_utc(std::uint64_t ticks) {
  using namespace std::chrono;
  const std::uint64_t total_ms = ticks / kTicksPerMillisecond;
  const std::int64_t day_count = static_cast<std::int64_t>(total_ms / kMillisPerDay);
  const std::uint64_t rem_ms = total_ms % kMillisPerDay;

  // chrono::year is a 16-bit count; past that there is no calendar to render.
  if (day_count > 10'373'400) {  // ~year 30000
    throw std::domain_error("tick value beyond renderable calendar range");
  }

  constexpr sys_days epoch{std::chrono::year{1601} / 1 / 1};
  const year_month_day ymd{epoch + days{day_count}};

  const unsigned hour = static_cast<unsigned>(rem_ms / 3'600'000);
  const unsigned minute = static_cast<unsigned>(rem_ms / 60'000 % 60);
  const unsigned second = static_cast<unsigned>(rem_ms / 1000 % 60);
  const unsigned milli = static_cast<unsigned>(rem_ms % 1000);

  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02u:%02u:%02u.%03u +00:00",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), hour, minute, second, milli);
  return buf;
}

std::string ticks_to_utc(NormalizedTime t) {
  if (t.domain != TimeDomain::ABSOLUTE) {
    throw std::domain_error("cannot render " + std::string(to_string(t.domain)) +
                            " time as UTC calendar text");
  }
  return ticks_to_utc(t.ticks);
}

}  // namespace hidtrace
