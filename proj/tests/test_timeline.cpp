#include <doctest.h>

#include <algorithm>
#include <random>

#include "hidtrace/log_codec.hpp"
#include "hidtrace/timeline.hpp"
#include "support/io.hpp"
#include "support/random_events.hpp"

using namespace hidtrace;

namespace {

const std::uint64_t kBase = 133197924344035078ULL;

KeystrokeEvent key_at(std::uint64_t ticks) {
  return KeystrokeEvent::make(NormalizedTime::absolute(ticks), 0x1E);
}

}  // namespace

TEST_CASE("build_timeline sorts and is permutation invariant") {
  const std::string fixture = testio::fixture("attack_atmel.txt");
  ParseReport forward = parse_log(fixture);

  Timeline a = build_timeline(forward.keys, forward.hosts);

  std::vector<HostEvent> reversed(forward.hosts.rbegin(), forward.hosts.rend());
  Timeline b = build_timeline(forward.keys, reversed);

  REQUIRE(a.entries().size() == b.entries().size());
  CHECK(a.entries() == b.entries());

  // Chronology holds regardless of feed order.
  for (std::size_t i = 1; i < a.entries().size(); ++i) {
    CHECK(a.entries()[i - 1].ticks <= a.entries()[i].ticks);
  }
}

TEST_CASE("empty inputs yield an empty timeline") {
  Timeline tl = build_timeline({}, {});
  CHECK(tl.entries().empty());
  CHECK(tl.unplaced().empty());
}

TEST_CASE("ties order causes before effects") {
  std::vector<HostEvent> hosts;
  hosts.push_back(HostEvent::process_start(NormalizedTime::absolute(kBase), 10, "\\p.exe"));
  hosts.push_back(HostEvent::image_load(NormalizedTime::absolute(kBase), "\\d.sys"));
  hosts.push_back(
      HostEvent::pnp_attach(NormalizedTime::absolute(kBase), decompose_device_id("USB\\x\\1")));
  std::vector<KeystrokeEvent> keys = {key_at(kBase)};

  Timeline tl = build_timeline(keys, hosts);
  REQUIRE(tl.entries().size() == 4);
  CHECK(tl.entries()[0].cls == EventClass::PNP_ATTACH);
  CHECK(tl.entries()[1].cls == EventClass::IMAGE_LOAD);
  CHECK(tl.entries()[2].cls == EventClass::PROCESS_START);
  CHECK(tl.entries()[3].cls == EventClass::KEY);
}

TEST_CASE("non-absolute and suspect events go to unplaced, never dropped") {
  std::vector<HostEvent> hosts;
  hosts.push_back(HostEvent::image_load(NormalizedTime::raw_relative(2968525321ULL),
                                        "\\hidusb.sys"));
  hosts.push_back(HostEvent::image_load(NormalizedTime::unknown(), "\\hidusb.sys"));
  // Absolute but before 2000: suspect.
  hosts.push_back(HostEvent::process_start(
      NormalizedTime::absolute(kYear2000Ticks - 1), 5, "\\old.exe"));
  std::vector<KeystrokeEvent> keys = {key_at(kBase)};

  Timeline tl = build_timeline(keys, hosts);
  CHECK(tl.entries().size() == 1);
  REQUIRE(tl.unplaced().size() == 3);
  CHECK(tl.unplaced()[0].reason == UnplacedReason::RAW_RELATIVE_TIME);
  CHECK(tl.unplaced()[1].reason == UnplacedReason::UNKNOWN_TIME);
  CHECK(tl.unplaced()[2].reason == UnplacedReason::SUSPECT_EPOCH);
  CHECK(tl.entries().size() + tl.unplaced().size() == keys.size() + hosts.size());
}

TEST_CASE("shuffled events equal the comparison-sort oracle") {
  std::mt19937_64 rng(1234);
  std::vector<KeystrokeEvent> keys;
  std::vector<HostEvent> hosts;
  for (int i = 0; i < 500; ++i) keys.push_back(testgen::random_key_event(rng));
  for (int i = 0; i < 500; ++i) hosts.push_back(testgen::random_host_event(rng));
  std::shuffle(keys.begin(), keys.end(), rng);
  std::shuffle(hosts.begin(), hosts.end(), rng);

  Timeline tl = build_timeline(keys, hosts);

  // Oracle: comparison sort over (ticks, class, feed index) of the same feed.
  struct Flat {
    std::uint64_t ticks;
    int cls;
    std::size_t index;
  };
  std::vector<Flat> expected;
  std::size_t index = 0;
  auto cls_of = [](const HostEvent& h) {
    switch (h.kind) {
      case HostEventKind::PNP_ATTACH: return 0;
      case HostEventKind::IMAGE_LOAD: return 1;
      case HostEventKind::PROCESS_START: return 2;
    }
    return 2;
  };
  for (const HostEvent& h : hosts) {
    if (h.time.domain == TimeDomain::ABSOLUTE && h.time.ticks >= kYear2000Ticks) {
      expected.push_back({h.time.ticks, cls_of(h), index});
    }
    ++index;
  }
  for (const KeystrokeEvent& k : keys) {
    if (k.time.domain == TimeDomain::ABSOLUTE && k.time.ticks >= kYear2000Ticks) {
      expected.push_back({k.time.ticks, 3, index});
    }
    ++index;
  }
  std::sort(expected.begin(), expected.end(), [](const Flat& a, const Flat& b) {
    if (a.ticks != b.ticks) return a.ticks < b.ticks;
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.index < b.index;
  });

  REQUIRE(tl.entries().size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(tl.entries()[i].ticks == expected[i].ticks);
    CHECK(static_cast<int>(tl.entries()[i].cls) == expected[i].cls);
  }
  CHECK(tl.entries().size() + tl.unplaced().size() == keys.size() + hosts.size());

  // Permutation invariance across a different shuffle of the same events.
  std::shuffle(keys.begin(), keys.end(), rng);
  std::shuffle(hosts.begin(), hosts.end(), rng);
  Timeline tl2 = build_timeline(keys, hosts);
  CHECK(tl.entries() == tl2.entries());
}

TEST_CASE("window_query uses closed bounds and class filters") {
  std::vector<KeystrokeEvent> keys = {key_at(kBase), key_at(kBase + 10),
                                      key_at(kBase + 20)};
  Timeline tl = build_timeline(keys, {});

  auto exact = tl.window_query(kBase + 10, kBase + 10, {EventClass::KEY});
  REQUIRE(exact.size() == 1);
  CHECK(tl.entries()[exact[0]].ticks == kBase + 10);

  CHECK(tl.window_query(kBase, kBase + 20, EventClassSet::all()).size() == 3);
  CHECK(tl.window_query(kBase, kBase + 20, EventClassSet{}).empty());
  CHECK(tl.window_query(kBase, kBase + 20, {EventClass::PNP_ATTACH}).empty());

  CHECK_THROWS_AS(tl.window_query(kBase + 1, kBase, EventClassSet::all()),
                  std::invalid_argument);
}

TEST_CASE("window_query partitions compose") {
  std::mt19937_64 rng(777);
  std::vector<KeystrokeEvent> keys;
  std::uniform_int_distribution<std::uint64_t> dist(kBase, kBase + 1'000'000);
  for (int i = 0; i < 300; ++i) keys.push_back(key_at(dist(rng)));
  Timeline tl = build_timeline(keys, {});

  const std::uint64_t t0 = kBase, t1 = kBase + 400'000, t2 = kBase + 1'000'000;
  auto left = tl.window_query(t0, t1, EventClassSet::all());
  auto right = tl.window_query(t1 + 1, t2, EventClassSet::all());
  auto whole = tl.window_query(t0, t2, EventClassSet::all());
  left.insert(left.end(), right.begin(), right.end());
  CHECK(left == whole);
}

TEST_CASE("attack fixture window query finds the device around the spawn") {
  ParseReport report = parse_log(testio::fixture("attack_atmel.txt"));
  Timeline tl = build_timeline(report.keys, report.hosts);

  const std::uint64_t spawn =
      normalize_timestamp("2023-02-02 21:48:17.752 -08:00").ticks;
  const std::uint64_t ten_s = 10 * kTicksPerSecond;
  auto hits = tl.window_query(spawn - ten_s, spawn + ten_s, {EventClass::PNP_ATTACH});
  REQUIRE(hits.size() == 1);
  const HostEvent& attach = *tl.entries()[hits[0]].host();
  CHECK(attach.device_id->vendor_string == "ATMEL");
}
