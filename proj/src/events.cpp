#include "hidtrace/events.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace hidtrace {

namespace {

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Case-insensitive substring search; returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    std::size_t j = 0;
    while (j < needle.size() && lower(haystack[i + j]) == lower(needle[j])) ++j;
    if (j == needle.size()) return i;
  }
  return std::string_view::npos;
}

bool is_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

// Parses up to four hex digits following a VID_/PID_ token.
std::optional<std::uint16_t> hex_after(std::string_view s, std::size_t token_end) {
  std::size_t n = 0;
  while (token_end + n < s.size() && n < 4 && is_hex(s[token_end + n])) ++n;
  if (n == 0) return std::nullopt;
  std::uint16_t value = 0;
  std::from_chars(s.data() + token_end, s.data() + token_end + n, value, 16);
  return value;
}

}  // namespace

DeviceInstanceId decompose_device_id(std::string_view raw) {
  DeviceInstanceId id;
  id.raw.assign(raw);

  const std::size_t backslash = raw.find('\\');
  id.bus.assign(backslash == std::string_view::npos ? raw : raw.substr(0, backslash));

  if (auto pos = ifind(raw, "VID_"); pos != std::string_view::npos) {
    id.vid = hex_after(raw, pos + 4);
  }
  if (auto pos = ifind(raw, "PID_"); pos != std::string_view::npos) {
    id.pid = hex_after(raw, pos + 4);
  }
  if (auto pos = ifind(raw, "Ven_"); pos != std::string_view::npos) {
    std::size_t start = pos + 4;
    std::size_t end = start;
    while (end < raw.size() && raw[end] != '&' && raw[end] != '\\') ++end;
    if (end > start) id.vendor_string = std::string(raw.substr(start, end - start));
  }
  return id;
}

KeystrokeEvent redact(const KeystrokeEvent& e) {
  return KeystrokeEvent::make_redacted(
      e.time, e.is_lock() ? RedactedCategory::LOCK : RedactedCategory::OTHER);
}

std::string_view to_string(HostEventKind k) {
  switch (k) {
    case HostEventKind::PROCESS_START: return "PROCESS_START";
    case HostEventKind::IMAGE_LOAD: return "IMAGE_LOAD";
    case HostEventKind::PNP_ATTACH: return "PNP_ATTACH";
  }
  return "?";
}

HostEvent HostEvent::process_start(NormalizedTime t, std::uint32_t pid, std::string path) {
  if (pid == 0) throw std::invalid_argument("process start requires pid > 0");
  if (path.empty()) throw std::invalid_argument("process start requires a path");
  HostEvent e;
  e.time = t;
  e.kind = HostEventKind::PROCESS_START;
  e.pid = pid;
  e.path = std::move(path);
  return e;
}

HostEvent HostEvent::image_load(NormalizedTime t, std::string path) {
  if (path.empty()) throw std::invalid_argument("image load requires a path");
  HostEvent e;
  e.time = t;
  e.kind = HostEventKind::IMAGE_LOAD;
  e.path = std::move(path);
  return e;
}

HostEvent HostEvent::pnp_attach(NormalizedTime t, DeviceInstanceId id) {
  if (id.raw.empty()) throw std::invalid_argument("PnP attach requires a device id");
  HostEvent e;
  e.time = t;
  e.kind = HostEventKind::PNP_ATTACH;
  e.device_id = std::move(id);
  return e;
}

std::string path_basename_lower(std::string_view path) {
  const std::size_t cut = path.find_last_of("\\/");
  if (cut != std::string_view::npos) path.remove_prefix(cut + 1);
  return ascii_lower(path);
}

std::string ascii_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(lower(c));
  return out;
}

}  // namespace hidtrace
