#include <doctest.h>

#include <random>

#include "hidtrace/events.hpp"
#include "hidtrace/time.hpp"
#include "support/oracles.hpp"

using namespace hidtrace;

TEST_CASE("normalize_timestamp classifies all-digit tokens by magnitude") {
  auto t = normalize_timestamp("133197924344035078");
  CHECK(t.domain == TimeDomain::ABSOLUTE);
  CHECK(t.ticks == 133197924344035078ULL);

  auto r = normalize_timestamp("2968525321");
  CHECK(r.domain == TimeDomain::RAW_RELATIVE);
  CHECK(r.ticks == 2968525321ULL);

  // Boundary: exactly 10^17 is already absolute.
  CHECK(normalize_timestamp("100000000000000000").domain == TimeDomain::ABSOLUTE);
  CHECK(normalize_timestamp("99999999999999999").domain == TimeDomain::RAW_RELATIVE);
}

TEST_CASE("normalize_timestamp handles datetime tokens with UTC offsets") {
  CHECK(normalize_timestamp("1601-01-01 00:00:00.000 +00:00") ==
        NormalizedTime::absolute(0));

  // 134774 days from 1601 to 1970, 864e9 ticks per day.
  CHECK(normalize_timestamp("1970-01-01 00:00:00.000 +00:00") ==
        NormalizedTime::absolute(116444736000000000ULL));

  // Attack-trace instant: local -08:00 means UTC is eight hours later.
  const std::uint64_t expected = oracle::ticks_for_utc(2023, 2, 3, 5, 48, 10, 94);
  CHECK(normalize_timestamp("2023-02-02 21:48:10.094 -08:00") ==
        NormalizedTime::absolute(expected));
  CHECK(normalize_timestamp("2023-02-03 05:48:10.094 +00:00") ==
        NormalizedTime::absolute(expected));
}

TEST_CASE("normalize_timestamp rejects malformed tokens") {
  for (const char* bad : {"", "x", "12x34", "2023-2-2 21:48:10.094 -08:00",
                          "2023-02-30 00:00:00.000 +00:00",
                          "2023-02-02 24:00:00.000 +00:00",
                          "2023-02-02 21:48:10.94 -08:00",
                          "2023-02-02 21:48:10.094 -08:0",
                          "2023-02-02 21:48:10.094",
                          "1600-12-31 23:59:59.999 +00:00",
                          "99999999999999999999999"}) {
    CHECK_THROWS_AS(normalize_timestamp(bad), ParseError);
  }
  // Offset pushing the instant before the 1601 epoch.
  CHECK_THROWS_AS(normalize_timestamp("1601-01-01 00:00:00.000 +01:00"), ParseError);
}

TEST_CASE("ticks_to_utc anchors and domain errors") {
  CHECK(ticks_to_utc(NormalizedTime::absolute(0)) == "1601-01-01 00:00:00.000 +00:00");
  CHECK(ticks_to_utc(NormalizedTime::absolute(116444736000000000ULL)) ==
        "1970-01-01 00:00:00.000 +00:00");
  CHECK(ticks_to_utc(NormalizedTime::absolute(133197924344035078ULL)) ==
        oracle::render_utc(133197924344035078ULL));

  CHECK_THROWS_AS(ticks_to_utc(NormalizedTime::raw_relative(5)), std::domain_error);
  CHECK_THROWS_AS(ticks_to_utc(NormalizedTime::unknown()), std::domain_error);
}

TEST_CASE("calendar conversion matches the day-accumulation oracle") {
  std::mt19937_64 rng(20230202);
  std::uniform_int_distribution<std::uint64_t> dist(0, (1ULL << 62) - 1);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t ticks = dist(rng);
    CHECK(ticks_to_utc(NormalizedTime::absolute(ticks)) == oracle::render_utc(ticks));
  }
}

TEST_CASE("normalize of rendered ticks is identity up to millisecond truncation") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint64_t> dist(0, (1ULL << 62) - 1);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t ticks = dist(rng);
    const NormalizedTime round =
        normalize_timestamp(ticks_to_utc(NormalizedTime::absolute(ticks)));
    CHECK(round.domain == TimeDomain::ABSOLUTE);
    CHECK(round.ticks == ticks - ticks % kTicksPerMillisecond);
  }
}

TEST_CASE("lock classification is exactly the three lock make codes") {
  std::size_t lock_count = 0;
  for (std::uint32_t code = 0; code <= 0xFFFF; ++code) {
    if (is_lock_scan_code(static_cast<std::uint16_t>(code))) ++lock_count;
  }
  CHECK(lock_count == 3);
  CHECK(is_lock_scan_code(0x3A));
  CHECK(is_lock_scan_code(0x45));
  CHECK(is_lock_scan_code(0x46));
  CHECK_FALSE(is_lock_scan_code(0x1E));
}

TEST_CASE("decompose_device_id extracts bus, vid/pid, and vendor tokens") {
  auto razer = decompose_device_id("USB\\VID_1532&PID_0084\\5&1c5b639f&0&2");
  CHECK(razer.bus == "USB");
  CHECK(razer.vid == std::uint16_t{0x1532});
  CHECK(razer.pid == std::uint16_t{0x0084});
  CHECK_FALSE(razer.vendor_string.has_value());
  CHECK(razer.raw == "USB\\VID_1532&PID_0084\\5&1c5b639f&0&2");

  auto atmel = decompose_device_id(
      "USBSTOR\\Disk&Ven_ATMEL&Prod_Mass_Storage&Rev_1.00\\7&85c08e4&0&111111111111&0");
  CHECK(atmel.bus == "USBSTOR");
  CHECK_FALSE(atmel.vid.has_value());
  CHECK_FALSE(atmel.pid.has_value());
  CHECK(atmel.vendor_string == "ATMEL");

  auto acpi = decompose_device_id("ACPI\\PNP0303\\0");
  CHECK(acpi.bus == "ACPI");
  CHECK_FALSE(acpi.vid.has_value());
  CHECK_FALSE(acpi.pid.has_value());
  CHECK_FALSE(acpi.vendor_string.has_value());
}

TEST_CASE("decompose_device_id never loses the raw text") {
  std::mt19937_64 rng(7);
  const std::string alphabet = "ABCDEFabcdef0123456789\\&_VIDPen";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<std::size_t> len(1, 60);
  for (int i = 0; i < 500; ++i) {
    std::string raw;
    const std::size_t n = len(rng);
    for (std::size_t j = 0; j < n; ++j) raw.push_back(alphabet[pick(rng)]);
    CHECK(decompose_device_id(raw).raw == raw);
  }
}
