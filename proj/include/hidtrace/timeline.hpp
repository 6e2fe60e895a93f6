#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hidtrace/events.hpp"

namespace hidtrace {

// Correlation classes in tie-break order: causes (device attach, driver
// load) sort before effects (process start, keystroke) at equal ticks.
enum class EventClass { PNP_ATTACH = 0, IMAGE_LOAD = 1, PROCESS_START = 2, KEY = 3 };

std::string_view to_string(EventClass c);

struct EventClassSet {
  unsigned bits = 0;

  EventClassSet() = default;
  EventClassSet(std::initializer_list<EventClass> classes) {
    for (EventClass c : classes) bits |= 1u << static_cast<unsigned>(c);
  }
  bool contains(EventClass c) const { return bits & (1u << static_cast<unsigned>(c)); }
  static EventClassSet all() { return {EventClass::PNP_ATTACH, EventClass::IMAGE_LOAD,
                                       EventClass::PROCESS_START, EventClass::KEY}; }
};

struct TimelineEntry {
  std::uint64_t ticks = 0;
  EventClass cls = EventClass::KEY;
  std::variant<KeystrokeEvent, HostEvent> event;

  const KeystrokeEvent* key() const { return std::get_if<KeystrokeEvent>(&event); }
  const HostEvent* host() const { return std::get_if<HostEvent>(&event); }

  bool operator==(const TimelineEntry&) const = default;
};

enum class UnplacedReason {
  RAW_RELATIVE_TIME,  // no epoch; never compared against absolute times
  UNKNOWN_TIME,       // record carried no timestamp
  SUSPECT_EPOCH,      // absolute but before 2000-01-01
};

std::string_view to_string(UnplacedReason r);

struct UnplacedEvent {
  UnplacedReason reason;
  std::variant<KeystrokeEvent, HostEvent> event;
};

// Time-ordered merge of all ABSOLUTE-domain events. Events that cannot be
// placed on the absolute axis are reported, never silently dropped, and
// never correlated.
class Timeline {
 public:
  static Timeline build(std::span<const KeystrokeEvent> keys,
                        std::span<const HostEvent> hosts);

  const std::vector<TimelineEntry>& entries() const { return entries_; }
  const std::vector<UnplacedEvent>& unplaced() const { return unplaced_; }

  // Entry indices with t0 <= ticks <= t1 (closed interval) and a wanted
  // class, in timeline order. Throws std::invalid_argument when t0 > t1.
  std::vector<std::size_t> window_query(std::uint64_t t0, std::uint64_t t1,
                                        EventClassSet classes) const;

 private:
  std::vector<TimelineEntry> entries_;
  std::vector<UnplacedEvent> unplaced_;
};

inline Timeline build_timeline(std::span<const KeystrokeEvent> keys,
                               std::span<const HostEvent> hosts) {
  return Timeline::build(keys, hosts);
}

}  // namespace hidtrace
