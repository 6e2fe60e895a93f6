#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hidtrace/time.hpp"

namespace hidtrace {

// Windows PnP device instance ID, decomposed but never lossy: [raw] always
// round-trips unchanged.
struct DeviceInstanceId {
  std::string raw;
  std::string bus;  // text before the first '\' (e.g. USB, HID, USBSTOR, ACPI)
  std::optional<std::uint16_t> vid;
  std::optional<std::uint16_t> pid;
  std::optional<std::string> vendor_string;  // Ven_<name> token (USBSTOR form)

  bool operator==(const DeviceInstanceId&) const = default;
};

DeviceInstanceId decompose_device_id(std::string_view raw);

enum class RedactedCategory { LOCK, OTHER };

// One key make-event. Full captures carry the scan code set 1 make code;
// redacted captures carry only whether the key was a lock key.
struct KeystrokeEvent {
  NormalizedTime time;
  std::variant<std::uint16_t, RedactedCategory> key{std::uint16_t{0}};

  static KeystrokeEvent make(NormalizedTime t, std::uint16_t scan_code) {
    return {t, scan_code};
  }
  static KeystrokeEvent make_redacted(NormalizedTime t, RedactedCategory c) {
    return {t, c};
  }

  bool redacted() const { return std::holds_alternative<RedactedCategory>(key); }
  std::optional<std::uint16_t> scan_code() const {
    if (auto* sc = std::get_if<std::uint16_t>(&key)) return *sc;
    return std::nullopt;
  }
  bool is_lock() const {
    if (auto* sc = std::get_if<std::uint16_t>(&key)) return is_lock_scan_code(*sc);
    return std::get<RedactedCategory>(key) == RedactedCategory::LOCK;
  }

  bool operator==(const KeystrokeEvent&) const = default;
};

// Drops the scan code, keeping only the lock/other distinction.
KeystrokeEvent redact(const KeystrokeEvent& e);

enum class HostEventKind { PROCESS_START, IMAGE_LOAD, PNP_ATTACH };

std::string_view to_string(HostEventKind k);

// Process-start / image-load / PnP-attach record; exactly the fields of the
// declared kind are populated (enforced by the factories).
struct HostEvent {
  NormalizedTime time;
  HostEventKind kind = HostEventKind::PROCESS_START;
  std::optional<std::uint32_t> pid;          // PROCESS_START only
  std::string path;                          // PROCESS_START, IMAGE_LOAD
  std::optional<DeviceInstanceId> device_id; // PNP_ATTACH only

  static HostEvent process_start(NormalizedTime t, std::uint32_t pid, std::string path);
  static HostEvent image_load(NormalizedTime t, std::string path);
  static HostEvent pnp_attach(NormalizedTime t, DeviceInstanceId id);

  bool operator==(const HostEvent&) const = default;
};

// Final path component after the last '\' or '/', ASCII-lowercased.
// Host paths are device-path form ("\Device\HarddiskVolume3\...\cmd.exe").
std::string path_basename_lower(std::string_view path);

std::string ascii_lower(std::string_view s);

}  // namespace hidtrace
