#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testio {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("test input missing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string fixture(const std::string& name) {
  return read_file(std::string(HIDTRACE_FIXTURE_DIR) + "/" + name);
}

inline std::string scenario_dir() { return HIDTRACE_SCENARIO_DIR; }

}  // namespace testio
