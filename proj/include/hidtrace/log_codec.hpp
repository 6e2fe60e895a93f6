#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hidtrace/events.hpp"

namespace hidtrace {

enum class LogRecordKind { KEY, PROCESS, IMAGE, PNP };

std::string_view record_prefix(LogRecordKind k);  // "KeyLog:" ... "PnpLog:"
std::string_view record_suffix(LogRecordKind k);  // ":EndKeyLog" ... ":EndPnpLog"
std::string_view to_string(LogRecordKind k);
std::optional<LogRecordKind> record_kind_from_name(std::string_view name);

// One framed record as found in the stream: body between prefix and matching
// suffix, with newlines removed (records may wrap at arbitrary columns).
struct RawRecord {
  LogRecordKind kind;
  std::string body;
  std::size_t offset = 0;  // byte offset of the prefix in the original input
};

struct ParseIssue {
  std::size_t offset = 0;
  std::string reason;
  std::string fragment;
  LogRecordKind kind = LogRecordKind::KEY;  // family of the offending record
};

struct ScanResult {
  std::vector<RawRecord> records;
  std::vector<ParseIssue> errors;  // orphan prefixes with no terminator
  std::size_t bytes_skipped = 0;   // non-record, non-newline bytes passed over
};

// Frames records in [text]. Text outside records is skipped; a prefix with no
// matching ":End<Kind>Log" before end-of-stream yields one error entry and
// scanning resumes right after that prefix.
ScanResult scan_records(std::string_view text);

// Body parsers; bodies are prefix/suffix-stripped. All throw ParseError.
KeystrokeEvent parse_key_record(std::string_view body);
HostEvent parse_process_record(std::string_view body);
HostEvent parse_image_record(std::string_view body);
HostEvent parse_pnp_record(std::string_view body);

// Exact inverses of the parsers, one record per line, no wrapping.
// ABSOLUTE and RAW_RELATIVE times emit as tick digits; an IMAGE_LOAD with
// UNKNOWN time emits the timestamp-less form.
std::string emit_record(const KeystrokeEvent& e);
std::string emit_record(const HostEvent& e);

struct ParseReport {
  std::vector<KeystrokeEvent> keys;
  std::vector<HostEvent> hosts;
  std::vector<ParseIssue> errors;
  std::size_t records_seen = 0;
  std::size_t bytes_skipped = 0;

  std::size_t event_count() const { return keys.size() + hosts.size(); }
  void merge(ParseReport other);
};

// Scans and parses a whole stream. When [expected] is set, records of any
// other kind are reported as errors instead of events.
ParseReport parse_log(std::string_view text,
                      std::optional<LogRecordKind> expected = std::nullopt);

}  // namespace hidtrace
