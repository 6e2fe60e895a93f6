#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hidtrace/events.hpp"

namespace hidtrace {

// Supported DuckyScript subset: enough to reproduce fast strings, sleeps,
// modifier combos, and lock-key spam. No variables or control flow.
enum class DuckyKind {
  REM,
  DELAY,
  DEFAULT_DELAY,
  STRING,
  STRINGLN,
  ENTER,
  TAB,
  GUI,
  CTRL,
  ALT,
  SHIFT,
  CAPSLOCK,
  NUMLOCK,
  SCROLLLOCK,
};

struct DuckyCommand {
  DuckyKind kind = DuckyKind::REM;
  std::string text;             // REM comment or STRING/STRINGLN payload
  std::uint32_t delay_ms = 0;   // DELAY / DEFAULT_DELAY argument
  std::optional<char> key;      // modifier combo key (GUI r, CTRL c, ...)
};

// One command per line; blank lines are skipped, REM is retained. Throws
// ParseError naming the line of an unknown keyword or malformed argument.
std::vector<DuckyCommand> parse_ducky(std::string_view script);

// Selected scan code set 1 make codes.
inline constexpr std::uint16_t kScanEnter = 0x1C;
inline constexpr std::uint16_t kScanTab = 0x0F;
inline constexpr std::uint16_t kScanLeftShift = 0x2A;
inline constexpr std::uint16_t kScanLeftCtrl = 0x1D;
inline constexpr std::uint16_t kScanLeftAlt = 0x38;
inline constexpr std::uint16_t kScanLeftGui = 0xE05B;  // extended E0 5B

// US-layout scan code set 1 mapping for printable ASCII. Shifted characters
// expand to the shift make code followed by the base key's make code.
// Throws ParseError for anything outside 0x20..0x7E.
std::vector<std::uint16_t> char_to_scancodes(char c);

struct CompiledKeys {
  std::vector<KeystrokeEvent> events;
  std::uint64_t end_ticks = 0;  // virtual clock after the last command
};

// Plays the command list on a virtual clock starting at [start_ticks]: every
// emitted make code advances the clock by [keystroke_interval_ms] (or the
// active DEFAULT_DELAY), DELAY advances it without keys. Deterministic.
CompiledKeys compile_commands(std::span<const DuckyCommand> commands,
                              std::uint64_t start_ticks,
                              double keystroke_interval_ms = 5.0);

}  // namespace hidtrace
