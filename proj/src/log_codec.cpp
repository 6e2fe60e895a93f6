#include "hidtrace/log_codec.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <utility>

namespace hidtrace {

namespace {

constexpr std::array<LogRecordKind, 4> kAllKinds = {
    LogRecordKind::KEY, LogRecordKind::PROCESS, LogRecordKind::IMAGE,
    LogRecordKind::PNP};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length of a leading all-digit run.
std::size_t digit_run(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && is_digit(s[n])) ++n;
  return n;
}

// Length of a leading timestamp token, if any: either a digit run or a
// full datetime (which contains ':' and must be consumed as a whole).
// The token must be followed by ':' or end-of-body.
std::size_t timestamp_token_length(std::string_view body) {
  // Datetime beats digit-run: both start with digits.
  static constexpr std::string_view probe = "0000-00-00 00:00:00.000 +00:00";
  if (body.size() >= probe.size()) {
    // Cheap shape check before handing to the strict parser: a datetime has
    // '-' after its year digits.
    std::size_t year_len = digit_run(body);
    if (year_len >= 4 && year_len < body.size() && body[year_len] == '-') {
      std::size_t len = year_len + probe.size() - 4;
      if (len <= body.size()) {
        std::string_view candidate = body.substr(0, len);
        try {
          normalize_timestamp(candidate);
          if (len == body.size() || body[len] == ':') return len;
        } catch (const ParseError&) {
        }
      }
    }
  }
  std::size_t n = digit_run(body);
  if (n > 0 && (n == body.size() || body[n] == ':')) return n;
  return 0;
}

// Splits "<timestamp>:<rest>" returning the normalized time and the rest.
std::pair<NormalizedTime, std::string_view> take_timestamp(std::string_view body,
                                                           std::string_view what) {
  std::size_t len = timestamp_token_length(body);
  if (len == 0) {
    throw ParseError(std::string(what) + ": no timestamp at \"" +
                     std::string(body.substr(0, 32)) + "\"");
  }
  NormalizedTime t = normalize_timestamp(body.substr(0, len));
  if (len == body.size()) return {t, std::string_view{}};
  return {t, body.substr(len + 1)};  // skip the ':' separator
}

std::string hex_scan_code(std::uint16_t code) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "0x%02X", code);
  return buf;
}

std::string time_token(NormalizedTime t, std::string_view what) {
  if (t.domain == TimeDomain::UNKNOWN) {
    throw std::invalid_argument(std::string(what) + ": cannot emit UNKNOWN time");
  }
  return std::to_string(t.ticks);
}

}  // namespace

std::string_view record_prefix(LogRecordKind k) {
  switch (k) {
    case LogRecordKind::KEY: return "KeyLog:";
    case LogRecordKind::PROCESS: return "ProcessLog:";
    case LogRecordKind::IMAGE: return "ImageLog:";
    case LogRecordKind::PNP: return "PnpLog:";
  }
  return {};
}

std::string_view record_suffix(LogRecordKind k) {
  switch (k) {
    case LogRecordKind::KEY: return ":EndKeyLog";
    case LogRecordKind::PROCESS: return ":EndProcessLog";
    case LogRecordKind::IMAGE: return ":EndImageLog";
    case LogRecordKind::PNP: return ":EndPnpLog";
  }
  return {};
}

std::string_view to_string(LogRecordKind k) {
  switch (k) {
    case LogRecordKind::KEY: return "key";
    case LogRecordKind::PROCESS: return "process";
    case LogRecordKind::IMAGE: return "image";
    case LogRecordKind::PNP: return "pnp";
  }
  return "?";
}

std::optional<LogRecordKind> record_kind_from_name(std::string_view name) {
  for (LogRecordKind k : kAllKinds) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

ScanResult scan_records(std::string_view text) {
  ScanResult result;

  // Records wrap at arbitrary columns, so scan a newline-free view and map
  // positions back to original byte offsets.
  std::string flat;
  flat.reserve(text.size());
  std::vector<std::size_t> origin;
  origin.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '\n' && c != '\r') {
      flat.push_back(c);
      origin.push_back(i);
    }
  }

  std::size_t pos = 0;
  while (pos < flat.size()) {
    std::size_t best = std::string::npos;
    LogRecordKind kind = LogRecordKind::KEY;
    for (LogRecordKind k : kAllKinds) {
      std::size_t p = flat.find(record_prefix(k), pos);
      if (p < best) {
        best = p;
        kind = k;
      }
    }
    if (best == std::string::npos) {
      result.bytes_skipped += flat.size() - pos;
      break;
    }
    result.bytes_skipped += best - pos;

    const std::size_t body_start = best + record_prefix(kind).size();
    const std::size_t end = flat.find(record_suffix(kind), body_start);
    if (end == std::string::npos) {
      result.errors.push_back(
          {origin[best],
           "record has no matching \"" + std::string(record_suffix(kind)) + "\"",
           flat.substr(best, 60), kind});
      pos = body_start;  // resume after the orphan prefix
      continue;
    }
    result.records.push_back(
        {kind, flat.substr(body_start, end - body_start), origin[best]});
    pos = end + record_suffix(kind).size();
  }
  return result;
}

KeystrokeEvent parse_key_record(std::string_view body) {
  auto [time, rest] = take_timestamp(body, "key record");
  if (rest == "LOCK") return KeystrokeEvent::make_redacted(time, RedactedCategory::LOCK);
  if (rest == "OTHER") return KeystrokeEvent::make_redacted(time, RedactedCategory::OTHER);
  if (rest.size() > 2 && rest.size() <= 6 && rest[0] == '0' &&
      (rest[1] == 'x' || rest[1] == 'X')) {
    std::uint16_t code = 0;
    auto [ptr, ec] = std::from_chars(rest.data() + 2, rest.data() + rest.size(), code, 16);
    if (ec == std::errc{} && ptr == rest.data() + rest.size()) {
      return KeystrokeEvent::make(time, code);
    }
  }
  throw ParseError("key record: unknown key token \"" + std::string(rest) +
                   "\" (expected 0x<hex make code>, LOCK, or OTHER)");
}

HostEvent parse_process_record(std::string_view body) {
  auto [time, rest] = take_timestamp(body, "process record");

  const std::size_t pid_len = digit_run(rest);
  if (pid_len == 0 || pid_len >= rest.size() || rest[pid_len] != ':') {
    throw ParseError("process record: missing numeric pid before image path in \"" +
                     std::string(rest.substr(0, 32)) + "\"");
  }
  std::uint32_t pid = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + pid_len, pid);
  if (ec != std::errc{} || ptr != rest.data() + pid_len || pid == 0) {
    throw ParseError("process record: pid \"" + std::string(rest.substr(0, pid_len)) +
                     "\" is not a positive 32-bit value");
  }

  std::string_view path = rest.substr(pid_len + 1);
  if (path.empty()) throw ParseError("process record: empty image path");
  return HostEvent::process_start(time, pid, std::string(path));
}

HostEvent parse_image_record(std::string_view body) {
  if (body.empty()) throw ParseError("image record: empty body");

  // Two shapes exist in the wild: "<timestamp>:<path>" and bare "<path>".
  if (std::size_t len = timestamp_token_length(body); len > 0 && len < body.size()) {
    NormalizedTime t = normalize_timestamp(body.substr(0, len));
    std::string_view path = body.substr(len + 1);
    if (path.empty()) throw ParseError("image record: empty image path");
    return HostEvent::image_load(t, std::string(path));
  }
  return HostEvent::image_load(NormalizedTime::unknown(), std::string(body));
}

HostEvent parse_pnp_record(std::string_view body) {
  // Device instance IDs never contain ':', so split at the first one; the
  // timestamp side may itself contain ':' in datetime form.
  const std::size_t colon = body.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("pnp record: no ':' between device id and timestamp in \"" +
                     std::string(body.substr(0, 48)) + "\"");
  }
  std::string_view id_text = body.substr(0, colon);
  if (id_text.empty()) throw ParseError("pnp record: empty device id");
  NormalizedTime t = normalize_timestamp(body.substr(colon + 1));
  return HostEvent::pnp_attach(t, decompose_device_id(id_text));
}

std::string emit_record(const KeystrokeEvent& e) {
  std::string key;
  if (auto sc = e.scan_code()) {
    key = hex_scan_code(*sc);
  } else {
    key = std::get<RedactedCategory>(e.key) == RedactedCategory::LOCK ? "LOCK" : "OTHER";
  }
  return "KeyLog:" + time_token(e.time, "key record") + ":" + key + ":EndKeyLog";
}

std::string emit_record(const HostEvent& e) {
  switch (e.kind) {
    case HostEventKind::PROCESS_START:
      return "ProcessLog:" + time_token(e.time, "process record") + ":" +
             std::to_string(*e.pid) + ":" + e.path + ":EndProcessLog";
    case HostEventKind::IMAGE_LOAD:
      if (e.time.domain == TimeDomain::UNKNOWN) {
        return "ImageLog:" + e.path + ":EndImageLog";
      }
      return "ImageLog:" + std::to_string(e.time.ticks) + ":" + e.path + ":EndImageLog";
    case HostEventKind::PNP_ATTACH:
      return "PnpLog:" + e.device_id->raw + ":" + time_token(e.time, "pnp record") +
             ":EndPnpLog";
  }
  throw std::invalid_argument("emit_record: bad host event kind");
}

void ParseReport::merge(ParseReport other) {
  keys.insert(keys.end(), std::make_move_iterator(other.keys.begin()),
              std::make_move_iterator(other.keys.end()));
  hosts.insert(hosts.end(), std::make_move_iterator(other.hosts.begin()),
               std::make_move_iterator(other.hosts.end()));
  errors.insert(errors.end(), std::make_move_iterator(other.errors.begin()),
                std::make_move_iterator(other.errors.end()));
  records_seen += other.records_seen;
  bytes_skipped += other.bytes_skipped;
}

ParseReport parse_log(std::string_view text, std::optional<LogRecordKind> expected) {
  ScanResult scan = scan_records(text);

  ParseReport report;
  report.errors = std::move(scan.errors);
  report.bytes_skipped = scan.bytes_skipped;
  report.records_seen = scan.records.size() + report.errors.size();

  for (const RawRecord& rec : scan.records) {
    if (expected && rec.kind != *expected) {
      report.errors.push_back({rec.offset,
                               "unexpected " + std::string(to_string(rec.kind)) +
                                   " record in a " + std::string(to_string(*expected)) +
                                   " log",
                               rec.body.substr(0, 60), rec.kind});
      continue;
    }
    try {
      switch (rec.kind) {
        case LogRecordKind::KEY:
          report.keys.push_back(parse_key_record(rec.body));
          break;
        case LogRecordKind::PROCESS:
          report.hosts.push_back(parse_process_record(rec.body));
          break;
        case LogRecordKind::IMAGE:
          report.hosts.push_back(parse_image_record(rec.body));
          break;
        case LogRecordKind::PNP:
          report.hosts.push_back(parse_pnp_record(rec.body));
          break;
      }
    } catch (const ParseError& err) {
      report.errors.push_back({rec.offset, err.what(), rec.body.substr(0, 60), rec.kind});
    }
  }
  return report;
}

}  // namespace hidtrace
