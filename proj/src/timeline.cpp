#include "hidtrace/timeline.hpp"

#include <algorithm>
#include <stdexcept>

namespace hidtrace {

namespace {

EventClass class_of(const HostEvent& e) {
  switch (e.kind) {
    case HostEventKind::PNP_ATTACH: return EventClass::PNP_ATTACH;
    case HostEventKind::IMAGE_LOAD: return EventClass::IMAGE_LOAD;
    case HostEventKind::PROCESS_START: return EventClass::PROCESS_START;
  }
  return EventClass::PROCESS_START;
}

}  // namespace

std::string_view to_string(EventClass c) {
  switch (c) {
    case EventClass::PNP_ATTACH: return "PNP_ATTACH";
    case EventClass::IMAGE_LOAD: return "IMAGE_LOAD";
    case EventClass::PROCESS_START: return "PROCESS_START";
    case EventClass::KEY: return "KEY";
  }
  return "?";
}

std::string_view to_string(UnplacedReason r) {
  switch (r) {
    case UnplacedReason::RAW_RELATIVE_TIME: return "raw-relative time";
    case UnplacedReason::UNKNOWN_TIME: return "no timestamp";
    case UnplacedReason::SUSPECT_EPOCH: return "suspect pre-2000 timestamp";
  }
  return "?";
}

Timeline Timeline::build(std::span<const KeystrokeEvent> keys,
                         std::span<const HostEvent> hosts) {
  Timeline tl;
  tl.entries_.reserve(keys.size() + hosts.size());

  auto place = [&tl](NormalizedTime t, EventClass cls,
                     std::variant<KeystrokeEvent, HostEvent> ev) {
    switch (t.domain) {
      case TimeDomain::RAW_RELATIVE:
        tl.unplaced_.push_back({UnplacedReason::RAW_RELATIVE_TIME, std::move(ev)});
        return;
      case TimeDomain::UNKNOWN:
        tl.unplaced_.push_back({UnplacedReason::UNKNOWN_TIME, std::move(ev)});
        return;
      case TimeDomain::ABSOLUTE:
        if (t.ticks < kYear2000Ticks) {
          tl.unplaced_.push_back({UnplacedReason::SUSPECT_EPOCH, std::move(ev)});
          return;
        }
        tl.entries_.push_back({t.ticks, cls, std::move(ev)});
        return;
    }
  };

  for (const HostEvent& h : hosts) place(h.time, class_of(h), h);
  for (const KeystrokeEvent& k : keys) place(k.time, EventClass::KEY, k);

  std::stable_sort(tl.entries_.begin(), tl.entries_.end(),
                   [](const TimelineEntry& a, const TimelineEntry& b) {
                     if (a.ticks != b.ticks) return a.ticks < b.ticks;
                     return static_cast<int>(a.cls) < static_cast<int>(b.cls);
                   });
  return tl;
}

std::vector<std::size_t> Timeline::window_query(std::uint64_t t0, std::uint64_t t1,
                                                EventClassSet classes) const {
  if (t0 > t1) {
    throw std::invalid_argument("window_query: t0 > t1");
  }
  std::vector<std::size_t> out;
  auto first = std::lower_bound(entries_.begin(), entries_.end(), t0,
                                [](const TimelineEntry& e, std::uint64_t t) {
                                  return e.ticks < t;
                                });
  for (auto it = first; it != entries_.end() && it->ticks <= t1; ++it) {
    if (classes.contains(it->cls)) {
      out.push_back(static_cast<std::size_t>(it - entries_.begin()));
    }
  }
  return out;
}

}  // namespace hidtrace
