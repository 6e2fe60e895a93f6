#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hidtrace/ducky.hpp"

namespace hidtrace {

// Synthetic human typist. Inter-key intervals are log-normal with the given
// mean (60 / (wpm * 5) seconds) and log-scale sigma; occasional thinking
// pauses are mixed in. Fully determined by the seed.
struct TypistProfile {
  double wpm = 60.0;
  double jitter_sigma = 0.35;
  double pause_probability = 0.02;
  double pause_seconds = 1.5;
  std::uint64_t seed = 0;

  double mean_interval_seconds() const { return 60.0 / (wpm * 5.0); }
  void validate() const;  // throws std::invalid_argument
};

// Keys for [duration_seconds] of free typing (letters and spaces).
std::vector<KeystrokeEvent> human_typing(double duration_seconds,
                                         const TypistProfile& profile,
                                         std::uint64_t start_ticks);
// Keys for typing [text] once, humanly.
std::vector<KeystrokeEvent> human_typing(std::string_view text,
                                         const TypistProfile& profile,
                                         std::uint64_t start_ticks);

struct AttachDevice {
  std::string device_id;
  std::vector<std::string> driver_paths;
  double at_seconds = 0.0;
};

struct RunPayload {
  std::string script;       // DuckyScript text
  double interval_ms = 5.0;
};

struct HumanTyping {
  double duration_seconds = 0.0;
  TypistProfile profile;
};

struct SpawnProcess {
  std::string path;
  std::uint32_t pid = 0;
  double at_seconds = 0.0;
};

using ScenarioElement = std::variant<AttachDevice, RunPayload, HumanTyping, SpawnProcess>;

// Attach/spawn elements are pinned at their offsets from the scenario start;
// payload and human-typing elements play back-to-back on the virtual clock
// (a leading DELAY positions a payload later on the timeline).
struct Scenario {
  std::uint64_t start_ticks = 0;
  std::vector<ScenarioElement> elements;
};

// Line-oriented scenario file:
//   start <ticks|datetime>
//   attach <device-id> [driver=<path>]... [at=<seconds>]
//   payload <file> [interval_ms=<N>]
//   human <wpm> <seconds> [seed=<N>]
//   spawn <path> pid=<N> at=<seconds>
// '#' comments and blank lines are skipped. Payload paths resolve relative
// to [base_dir]. Throws ParseError with line numbers.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioLogs {
  std::string keys;
  std::string processes;
  std::string images;
  std::string pnp;
};

// Emits the four log families for a scenario, each record through the codec
// emitters so outputs are parseable by construction.
ScenarioLogs synthesize_scenario(const Scenario& scenario);

}  // namespace hidtrace
