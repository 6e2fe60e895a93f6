#include "hidtrace/ducky.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace hidtrace {

namespace {

struct KeyStroke {
  std::uint16_t code;
  bool shifted;
};

// US QWERTY, scan code set 1 make codes, indexed by ASCII - 0x20.
constexpr std::array<KeyStroke, 95> build_ascii_table() {
  std::array<KeyStroke, 95> t{};
  auto set = [&t](char c, std::uint16_t code, bool shifted) {
    t[static_cast<std::size_t>(c) - 0x20] = {code, shifted};
  };
  set(' ', 0x39, false);
  constexpr std::string_view digits = "1234567890";
  for (std::size_t i = 0; i < digits.size(); ++i) {
    set(digits[i], static_cast<std::uint16_t>(0x02 + i), false);
  }
  constexpr std::string_view digit_shift = "!@#$%^&*()";
  for (std::size_t i = 0; i < digit_shift.size(); ++i) {
    set(digit_shift[i], static_cast<std::uint16_t>(0x02 + i), true);
  }
  constexpr std::string_view row1 = "qwertyuiop";
  for (std::size_t i = 0; i < row1.size(); ++i) {
    set(row1[i], static_cast<std::uint16_t>(0x10 + i), false);
  }
  constexpr std::string_view row2 = "asdfghjkl";
  for (std::size_t i = 0; i < row2.size(); ++i) {
    set(row2[i], static_cast<std::uint16_t>(0x1E + i), false);
  }
  constexpr std::string_view row3 = "zxcvbnm";
  for (std::size_t i = 0; i < row3.size(); ++i) {
    set(row3[i], static_cast<std::uint16_t>(0x2C + i), false);
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    const KeyStroke base = t[static_cast<std::size_t>(c) - 0x20];
    set(static_cast<char>(c - 'a' + 'A'), base.code, true);
  }
  set('-', 0x0C, false); set('_', 0x0C, true);
  set('=', 0x0D, false); set('+', 0x0D, true);
  set('[', 0x1A, false); set('{', 0x1A, true);
  set(']', 0x1B, false); set('}', 0x1B, true);
  set(';', 0x27, false); set(':', 0x27, true);
  set('\'', 0x28, false); set('"', 0x28, true);
  set('`', 0x29, false); set('~', 0x29, true);
  set('\\', 0x2B, false); set('|', 0x2B, true);
  set(',', 0x33, false); set('<', 0x33, true);
  set('.', 0x34, false); set('>', 0x34, true);
  set('/', 0x35, false); set('?', 0x35, true);
  return t;
}

constexpr auto kAsciiTable = build_ascii_table();

KeyStroke lookup(char c) {
  const unsigned char uc = static_cast<unsigned char>(c);
  if (uc < 0x20 || uc > 0x7E) {
    throw ParseError("unsupported character 0x" + [uc] {
      char buf[4];
      std::snprintf(buf, sizeof(buf), "%02X", uc);
      return std::string(buf);
    }() + " (printable ASCII only; use TAB/ENTER commands for control keys)");
  }
  return kAsciiTable[uc - 0x20];
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_line(std::size_t line_no, std::string_view why) {
  throw ParseError("ducky script line " + std::to_string(line_no) + ": " +
                   std::string(why));
}

std::uint32_t parse_ms(std::string_view arg, std::size_t line_no,
                       std::string_view keyword) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
  if (arg.empty() || ec != std::errc{} || ptr != arg.data() + arg.size()) {
    bad_line(line_no, std::string(keyword) + " expects a millisecond count, got \"" +
                          std::string(arg) + "\"");
  }
  return v;
}

std::optional<char> parse_combo_key(std::string_view arg, std::size_t line_no,
                                    std::string_view keyword) {
  if (arg.empty()) return std::nullopt;
  if (arg.size() != 1) {
    bad_line(line_no,
             std::string(keyword) + " takes at most one key character, got \"" +
                 std::string(arg) + "\"");
  }
  return arg[0];
}

void check_printable(std::string_view payload, std::size_t line_no) {
  for (char c : payload) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (uc < 0x20 || uc > 0x7E) {
      bad_line(line_no, "STRING payload must be printable ASCII");
    }
  }
}

}  // namespace

std::vector<DuckyCommand> parse_ducky(std::string_view script) {
  std::vector<DuckyCommand> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= script.size()) {
    std::size_t nl = script.find('\n', pos);
    if (nl == std::string_view::npos) nl = script.size();
    std::string_view line = strip_cr(script.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (rtrim(line).empty()) continue;

    std::size_t sp = line.find(' ');
    std::string_view keyword = sp == std::string_view::npos ? line : line.substr(0, sp);
    // STRING payloads keep the argument verbatim (trailing spaces type
    // spaces); everything else ignores trailing whitespace.
    std::string_view arg = sp == std::string_view::npos
                               ? std::string_view{}
                               : line.substr(sp + 1);
    std::string_view arg_trimmed = rtrim(arg);

    auto require_bare = [&](DuckyKind kind) {
      if (!arg_trimmed.empty()) {
        bad_line(line_no, std::string(keyword) + " takes no argument");
      }
      return kind;
    };

    DuckyCommand cmd;
    if (keyword == "REM") {
      cmd.kind = DuckyKind::REM;
      cmd.text.assign(arg);
    } else if (keyword == "DELAY") {
      cmd.kind = DuckyKind::DELAY;
      cmd.delay_ms = parse_ms(arg_trimmed, line_no, keyword);
    } else if (keyword == "DEFAULT_DELAY" || keyword == "DEFAULTDELAY") {
      cmd.kind = DuckyKind::DEFAULT_DELAY;
      cmd.delay_ms = parse_ms(arg_trimmed, line_no, keyword);
    } else if (keyword == "STRING" || keyword == "STRINGLN") {
      cmd.kind = keyword == "STRING" ? DuckyKind::STRING : DuckyKind::STRINGLN;
      check_printable(arg, line_no);
      cmd.text.assign(arg);
    } else if (keyword == "ENTER") {
      cmd.kind = require_bare(DuckyKind::ENTER);
    } else if (keyword == "TAB") {
      cmd.kind = require_bare(DuckyKind::TAB);
    } else if (keyword == "GUI" || keyword == "WINDOWS") {
      cmd.kind = DuckyKind::GUI;
      cmd.key = parse_combo_key(arg_trimmed, line_no, keyword);
    } else if (keyword == "CTRL" || keyword == "CONTROL") {
      cmd.kind = DuckyKind::CTRL;
      cmd.key = parse_combo_key(arg_trimmed, line_no, keyword);
    } else if (keyword == "ALT") {
      cmd.kind = DuckyKind::ALT;
      cmd.key = parse_combo_key(arg_trimmed, line_no, keyword);
    } else if (keyword == "SHIFT") {
      cmd.kind = DuckyKind::SHIFT;
      cmd.key = parse_combo_key(arg_trimmed, line_no, keyword);
    } else if (keyword == "CAPSLOCK") {
      cmd.kind = require_bare(DuckyKind::CAPSLOCK);
    } else if (keyword == "NUMLOCK") {
      cmd.kind = require_bare(DuckyKind::NUMLOCK);
    } else if (keyword == "SCROLLLOCK") {
      cmd.kind = require_bare(DuckyKind::SCROLLLOCK);
    } else {
      bad_line(line_no, "unknown keyword \"" + std::string(keyword) + "\"");
    }
    out.push_back(std::move(cmd));
  }
  return out;
}

std::vector<std::uint16_t> char_to_scancodes(char c) {
  const KeyStroke ks = lookup(c);
  if (ks.shifted) return {kScanLeftShift, ks.code};
  return {ks.code};
}

CompiledKeys compile_commands(std::span<const DuckyCommand> commands,
                              std::uint64_t start_ticks,
                              double keystroke_interval_ms) {
  CompiledKeys out;
  std::uint64_t clock = start_ticks;
  std::uint64_t step = milliseconds_to_ticks(keystroke_interval_ms);
  if (step == 0) step = 1;

  auto emit = [&](std::uint16_t code) {
    out.events.push_back(
        KeystrokeEvent::make(NormalizedTime::absolute(clock), code));
    clock += step;
  };
  auto emit_text = [&](std::string_view text) {
    for (char c : text) {
      for (std::uint16_t code : char_to_scancodes(c)) emit(code);
    }
  };
  // Modifier combos press the modifier then the base (unshifted) key.
  auto emit_combo = [&](std::uint16_t modifier, std::optional<char> key) {
    emit(modifier);
    if (key) {
      emit(lookup(static_cast<char>(
                      std::tolower(static_cast<unsigned char>(*key))))
               .code);
    }
  };

  for (const DuckyCommand& cmd : commands) {
    switch (cmd.kind) {
      case DuckyKind::REM:
        break;
      case DuckyKind::DELAY:
        clock += static_cast<std::uint64_t>(cmd.delay_ms) * kTicksPerMillisecond;
        break;
      case DuckyKind::DEFAULT_DELAY:
        step = static_cast<std::uint64_t>(cmd.delay_ms) * kTicksPerMillisecond;
        if (step == 0) step = 1;
        break;
      case DuckyKind::STRING:
        emit_text(cmd.text);
        break;
      case DuckyKind::STRINGLN:
        emit_text(cmd.text);
        emit(kScanEnter);
        break;
      case DuckyKind::ENTER:
        emit(kScanEnter);
        break;
      case DuckyKind::TAB:
        emit(kScanTab);
        break;
      case DuckyKind::GUI:
        emit_combo(kScanLeftGui, cmd.key);
        break;
      case DuckyKind::CTRL:
        emit_combo(kScanLeftCtrl, cmd.key);
        break;
      case DuckyKind::ALT:
        emit_combo(kScanLeftAlt, cmd.key);
        break;
      case DuckyKind::SHIFT:
        emit_combo(kScanLeftShift, cmd.key);
        break;
      case DuckyKind::CAPSLOCK:
        emit(kScanCapsLock);
        break;
      case DuckyKind::NUMLOCK:
        emit(kScanNumLock);
        break;
      case DuckyKind::SCROLLLOCK:
        emit(kScanScrollLock);
        break;
    }
  }
  out.end_ticks = clock;
  return out;
}

}  // namespace hidtrace
