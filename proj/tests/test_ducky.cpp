#include <doctest.h>

#include "hidtrace/detector.hpp"
#include "hidtrace/ducky.hpp"

using namespace hidtrace;

TEST_CASE("parse_ducky handles the command subset") {
  const auto cmds = parse_ducky("DELAY 1000\nSTRING powershell\nENTER");
  REQUIRE(cmds.size() == 3);
  CHECK(cmds[0].kind == DuckyKind::DELAY);
  CHECK(cmds[0].delay_ms == 1000);
  CHECK(cmds[1].kind == DuckyKind::STRING);
  CHECK(cmds[1].text == "powershell");
  CHECK(cmds[2].kind == DuckyKind::ENTER);

  const auto with_blank = parse_ducky("REM hi\n\nCAPSLOCK");
  REQUIRE(with_blank.size() == 2);
  CHECK(with_blank[0].kind == DuckyKind::REM);
  CHECK(with_blank[0].text == "hi");
  CHECK(with_blank[1].kind == DuckyKind::CAPSLOCK);

  const auto combo = parse_ducky("GUI r\nCTRL c\nSHIFT\nDEFAULT_DELAY 40");
  REQUIRE(combo.size() == 4);
  CHECK(combo[0].key == 'r');
  CHECK(combo[1].key == 'c');
  CHECK_FALSE(combo[2].key.has_value());
  CHECK(combo[3].kind == DuckyKind::DEFAULT_DELAY);
  CHECK(combo[3].delay_ms == 40);
}

TEST_CASE("parse_ducky errors carry line numbers") {
  try {
    parse_ducky("FROB 3");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  try {
    parse_ducky("REM ok\nDELAY soon");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_ducky("STRING caf\xc3\xa9"), ParseError);
  CHECK_THROWS_AS(parse_ducky("ENTER now"), ParseError);
  CHECK_THROWS_AS(parse_ducky("CTRL ALT"), ParseError);
}

TEST_CASE("char_to_scancodes maps the US layout") {
  CHECK(char_to_scancodes('a') == std::vector<std::uint16_t>{0x1E});
  CHECK(char_to_scancodes('A') == std::vector<std::uint16_t>{kScanLeftShift, 0x1E});
  CHECK(char_to_scancodes('1') == std::vector<std::uint16_t>{0x02});
  CHECK(char_to_scancodes('!') == std::vector<std::uint16_t>{kScanLeftShift, 0x02});
  CHECK(char_to_scancodes(' ') == std::vector<std::uint16_t>{0x39});
  CHECK(char_to_scancodes('/') == std::vector<std::uint16_t>{0x35});
  CHECK(char_to_scancodes('?') == std::vector<std::uint16_t>{kScanLeftShift, 0x35});
  CHECK_THROWS_AS(char_to_scancodes('\t'), ParseError);
  CHECK_THROWS_AS(char_to_scancodes(static_cast<char>(0xE9)), ParseError);
}

TEST_CASE("every printable ASCII character has a mapping") {
  for (int c = 0x20; c <= 0x7E; ++c) {
    const auto codes = char_to_scancodes(static_cast<char>(c));
    REQUIRE(!codes.empty());
    CHECK(codes.size() <= 2);
    if (codes.size() == 2) CHECK(codes[0] == kScanLeftShift);
    CHECK(codes.back() != 0);
  }
}

TEST_CASE("compile_commands advances a 5 ms virtual clock") {
  const auto cmds = parse_ducky("STRING hi");
  const CompiledKeys compiled = compile_commands(cmds, 0, 5.0);
  REQUIRE(compiled.events.size() == 2);
  CHECK(compiled.events[0].time.ticks == 0);
  CHECK(compiled.events[0].scan_code() == std::uint16_t{0x23});  // h
  CHECK(compiled.events[1].time.ticks == 50'000);                // 5 ms
  CHECK(compiled.events[1].scan_code() == std::uint16_t{0x17});  // i
  CHECK(compiled.end_ticks == 100'000);
}

TEST_CASE("DELAY inserts a detectable sleep between strings") {
  DetectionConfig cfg;
  const auto cmds = parse_ducky(
      "STRING aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa\n"
      "DELAY 8000\n"
      "STRING bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb");
  const std::uint64_t start = 133197924344035078ULL;
  const CompiledKeys compiled = compile_commands(cmds, start);
  REQUIRE(compiled.events.size() == 80);

  const auto gaps = detect_sleep_gaps(compiled.events, cfg);
  REQUIRE(gaps.size() == 1);
  const double len = ticks_to_seconds(gaps[0].end - gaps[0].start);
  CHECK(len > 7.9);
  CHECK(len < 8.1);
}

TEST_CASE("lock-key spam from a payload trips the detector") {
  DetectionConfig cfg;
  std::string script;
  for (int i = 0; i < 30; ++i) script += "CAPSLOCK\n";
  const CompiledKeys compiled =
      compile_commands(parse_ducky(script), 133197924344035078ULL);
  REQUIRE(compiled.events.size() == 30);
  for (const auto& e : compiled.events) CHECK(e.is_lock());

  const auto runs = detect_lock_key_abuse(compiled.events, cfg);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].count == 30);
}

TEST_CASE("DEFAULT_DELAY overrides the keystroke interval") {
  const auto cmds = parse_ducky("DEFAULT_DELAY 100\nSTRING ab");
  const CompiledKeys compiled = compile_commands(cmds, 0, 5.0);
  REQUIRE(compiled.events.size() == 2);
  CHECK(compiled.events[1].time.ticks == 100 * kTicksPerMillisecond);
}

TEST_CASE("modifier combos press the modifier then the base key") {
  const auto cmds = parse_ducky("GUI r");
  const CompiledKeys compiled = compile_commands(cmds, 0, 5.0);
  REQUIRE(compiled.events.size() == 2);
  CHECK(compiled.events[0].scan_code() == kScanLeftGui);
  CHECK(compiled.events[1].scan_code() == std::uint16_t{0x13});  // r
}

TEST_CASE("compile is deterministic") {
  const auto cmds = parse_ducky("STRING deterministic output\nDELAY 50\nENTER");
  const CompiledKeys a = compile_commands(cmds, 42, 7.0);
  const CompiledKeys b = compile_commands(cmds, 42, 7.0);
  CHECK(a.events == b.events);
  CHECK(a.end_ticks == b.end_ticks);
}

TEST_CASE("STRINGLN appends an enter") {
  const CompiledKeys compiled = compile_commands(parse_ducky("STRINGLN ok"), 0, 5.0);
  REQUIRE(compiled.events.size() == 3);
  CHECK(compiled.events.back().scan_code() == kScanEnter);
}
