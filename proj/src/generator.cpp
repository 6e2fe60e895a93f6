#include "hidtrace/generator.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hidtrace/log_codec.hpp"

namespace hidtrace {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void bad_line(std::size_t line_no, std::string_view why) {
  throw ParseError("scenario line " + std::to_string(line_no) + ": " + std::string(why));
}

double parse_num(std::string_view text, std::size_t line_no, std::string_view what) {
  try {
    std::size_t consumed = 0;
    double v = std::stod(std::string(text), &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    bad_line(line_no, std::string(what) + " expects a number, got \"" +
                          std::string(text) + "\"");
  }
}

std::uint64_t parse_u64(std::string_view text, std::size_t line_no,
                        std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    bad_line(line_no, std::string(what) + " expects an unsigned integer, got \"" +
                          std::string(text) + "\"");
  }
  return v;
}

// Interval sampler shared by both human_typing overloads. Log-normal keyed
// so the distribution mean equals the profile's mean interval.
class TypistClock {
 public:
  TypistClock(const TypistProfile& p, std::uint64_t start)
      : rng_(p.seed),
        interval_(std::log(p.mean_interval_seconds()) -
                      p.jitter_sigma * p.jitter_sigma / 2.0,
                  p.jitter_sigma),
        pause_(1.0 / p.pause_seconds),
        pause_probability_(p.pause_probability),
        clock_(start) {}

  std::uint64_t now() const { return clock_; }

  void advance() {
    double seconds = interval_(rng_);
    if (coin_(rng_) < pause_probability_) seconds += pause_(rng_);
    clock_ += seconds_to_ticks(seconds);
  }

  std::uint32_t pick(std::uint32_t n) {
    return static_cast<std::uint32_t>(rng_() % n);
  }

 private:
  std::mt19937_64 rng_;
  std::lognormal_distribution<double> interval_;
  std::exponential_distribution<double> pause_;
  std::uniform_real_distribution<double> coin_{0.0, 1.0};
  double pause_probability_;
  std::uint64_t clock_;
};

constexpr std::string_view kFillerChars = "etaoinshrdlu ";

}  // namespace

void TypistProfile::validate() const {
  if (!(wpm > 0.0) || !(jitter_sigma > 0.0) || !(pause_probability >= 0.0) ||
      !(pause_seconds > 0.0)) {
    throw std::invalid_argument("typist profile parameters must be positive");
  }
}

std::vector<KeystrokeEvent> human_typing(double duration_seconds,
                                         const TypistProfile& profile,
                                         std::uint64_t start_ticks) {
  profile.validate();
  std::vector<KeystrokeEvent> out;
  if (!(duration_seconds > 0.0)) return out;

  const std::uint64_t end = start_ticks + seconds_to_ticks(duration_seconds);
  TypistClock clock(profile, start_ticks);
  while (clock.now() < end) {
    const char c = kFillerChars[clock.pick(static_cast<std::uint32_t>(kFillerChars.size()))];
    out.push_back(KeystrokeEvent::make(NormalizedTime::absolute(clock.now()),
                                       char_to_scancodes(c).back()));
    clock.advance();
  }
  return out;
}

std::vector<KeystrokeEvent> human_typing(std::string_view text,
                                         const TypistProfile& profile,
                                         std::uint64_t start_ticks) {
  profile.validate();
  std::vector<KeystrokeEvent> out;
  TypistClock clock(profile, start_ticks);
  for (char c : text) {
    for (std::uint16_t code : char_to_scancodes(c)) {
      out.push_back(KeystrokeEvent::make(NormalizedTime::absolute(clock.now()), code));
      clock.advance();
    }
  }
  return out;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario scenario;
  bool have_start = false;
  double last_offset = 0.0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const std::size_t sp = line.find(' ');
    std::string_view verb = sp == std::string_view::npos ? line : line.substr(0, sp);
    std::string_view rest = sp == std::string_view::npos
                                ? std::string_view{}
                                : trim(line.substr(sp + 1));

    auto check_offset = [&](double at) {
      if (at < 0.0) bad_line(line_no, "offsets must be non-negative");
      if (at < last_offset) bad_line(line_no, "offsets must be non-decreasing");
      last_offset = at;
    };

    if (verb == "start") {
      if (rest.empty()) bad_line(line_no, "start expects ticks or a datetime");
      NormalizedTime t = normalize_timestamp(rest);
      if (t.domain != TimeDomain::ABSOLUTE) {
        bad_line(line_no, "start must be an absolute instant");
      }
      scenario.start_ticks = t.ticks;
      have_start = true;
    } else if (verb == "attach") {
      auto tokens = split_ws(rest);
      if (tokens.empty()) bad_line(line_no, "attach expects a device instance id");
      AttachDevice attach;
      attach.device_id.assign(tokens[0]);
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].starts_with("driver=")) {
          attach.driver_paths.emplace_back(tokens[i].substr(7));
        } else if (tokens[i].starts_with("at=")) {
          attach.at_seconds = parse_num(tokens[i].substr(3), line_no, "at");
        } else {
          bad_line(line_no, "attach: unknown option \"" + std::string(tokens[i]) + "\"");
        }
      }
      check_offset(attach.at_seconds);
      scenario.elements.emplace_back(std::move(attach));
    } else if (verb == "payload") {
      auto tokens = split_ws(rest);
      if (tokens.empty()) bad_line(line_no, "payload expects a script file");
      RunPayload payload;
      const std::filesystem::path script_path = base_dir / std::string(tokens[0]);
      std::ifstream in(script_path, std::ios::binary);
      if (!in) bad_line(line_no, "cannot open payload file " + script_path.string());
      std::ostringstream buf;
      buf << in.rdbuf();
      payload.script = buf.str();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].starts_with("interval_ms=")) {
          payload.interval_ms = parse_num(tokens[i].substr(12), line_no, "interval_ms");
          if (!(payload.interval_ms > 0.0)) {
            bad_line(line_no, "interval_ms must be positive");
          }
        } else {
          bad_line(line_no, "payload: unknown option \"" + std::string(tokens[i]) + "\"");
        }
      }
      scenario.elements.emplace_back(std::move(payload));
    } else if (verb == "human") {
      auto tokens = split_ws(rest);
      if (tokens.size() < 2) bad_line(line_no, "human expects <wpm> <seconds>");
      HumanTyping typing;
      typing.profile.wpm = parse_num(tokens[0], line_no, "wpm");
      typing.duration_seconds = parse_num(tokens[1], line_no, "seconds");
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        if (tokens[i].starts_with("seed=")) {
          typing.profile.seed = parse_u64(tokens[i].substr(5), line_no, "seed");
        } else {
          bad_line(line_no, "human: unknown option \"" + std::string(tokens[i]) + "\"");
        }
      }
      typing.profile.validate();
      scenario.elements.emplace_back(std::move(typing));
    } else if (verb == "spawn") {
      auto tokens = split_ws(rest);
      if (tokens.empty()) bad_line(line_no, "spawn expects a process path");
      SpawnProcess spawn;
      spawn.path.assign(tokens[0]);
      bool have_pid = false, have_at = false;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].starts_with("pid=")) {
          spawn.pid = static_cast<std::uint32_t>(
              parse_u64(tokens[i].substr(4), line_no, "pid"));
          have_pid = true;
        } else if (tokens[i].starts_with("at=")) {
          spawn.at_seconds = parse_num(tokens[i].substr(3), line_no, "at");
          have_at = true;
        } else {
          bad_line(line_no, "spawn: unknown option \"" + std::string(tokens[i]) + "\"");
        }
      }
      if (!have_pid || spawn.pid == 0) bad_line(line_no, "spawn requires pid=<positive>");
      if (!have_at) bad_line(line_no, "spawn requires at=<seconds>");
      check_offset(spawn.at_seconds);
      scenario.elements.emplace_back(std::move(spawn));
    } else {
      bad_line(line_no, "unknown directive \"" + std::string(verb) + "\"");
    }
  }

  if (!have_start && !scenario.elements.empty()) {
    throw ParseError("scenario: missing \"start <ticks|datetime>\" line");
  }
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("scenario: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

ScenarioLogs synthesize_scenario(const Scenario& scenario) {
  std::vector<KeystrokeEvent> keys;
  std::vector<HostEvent> processes, images, pnp;

  std::uint64_t typing_clock = scenario.start_ticks;
  const auto at_ticks = [&scenario](double seconds) {
    return scenario.start_ticks + seconds_to_ticks(seconds);
  };

  for (const ScenarioElement& element : scenario.elements) {
    if (const auto* attach = std::get_if<AttachDevice>(&element)) {
      const std::uint64_t t = at_ticks(attach->at_seconds);
      pnp.push_back(HostEvent::pnp_attach(NormalizedTime::absolute(t),
                                          decompose_device_id(attach->device_id)));
      // Driver images land moments after the attach, as the stack binds.
      std::uint64_t load = t;
      for (const std::string& driver : attach->driver_paths) {
        load += 50 * kTicksPerMillisecond;
        images.push_back(HostEvent::image_load(NormalizedTime::absolute(load), driver));
      }
    } else if (const auto* payload = std::get_if<RunPayload>(&element)) {
      auto commands = parse_ducky(payload->script);
      CompiledKeys compiled =
          compile_commands(commands, typing_clock, payload->interval_ms);
      keys.insert(keys.end(), compiled.events.begin(), compiled.events.end());
      typing_clock = compiled.end_ticks;
    } else if (const auto* typing = std::get_if<HumanTyping>(&element)) {
      auto events = human_typing(typing->duration_seconds, typing->profile, typing_clock);
      keys.insert(keys.end(), events.begin(), events.end());
      typing_clock += seconds_to_ticks(typing->duration_seconds);
    } else if (const auto* spawn = std::get_if<SpawnProcess>(&element)) {
      processes.push_back(HostEvent::process_start(
          NormalizedTime::absolute(at_ticks(spawn->at_seconds)), spawn->pid,
          spawn->path));
    }
  }

  auto by_ticks = [](const auto& a, const auto& b) {
    return a.time.ticks < b.time.ticks;
  };
  std::stable_sort(keys.begin(), keys.end(), by_ticks);
  std::stable_sort(processes.begin(), processes.end(), by_ticks);
  std::stable_sort(images.begin(), images.end(), by_ticks);
  std::stable_sort(pnp.begin(), pnp.end(), by_ticks);

  ScenarioLogs logs;
  for (const auto& k : keys) logs.keys += emit_record(k) + "\n";
  for (const auto& p : processes) logs.processes += emit_record(p) + "\n";
  for (const auto& i : images) logs.images += emit_record(i) + "\n";
  for (const auto& d : pnp) logs.pnp += emit_record(d) + "\n";
  return logs;
}

}  // namespace hidtrace
