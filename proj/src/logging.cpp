#include "vsn/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace vsn::log {

static Level parse_level(const char* value) {
  if (!value) return Level::Warn;
  std::string s(value);
  if (s == "error") return Level::Error;
  if (s == "warn") return Level::Warn;
  if (s == "info") return Level::Info;
  if (s == "debug") return Level::Debug;
  if (s == "trace") return Level::Trace;
  return Level::Warn;
}

Level threshold() {
  static Level level = parse_level(std::getenv("VSN_LOG"));
  return level;
}

bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

void write(Level level, const std::string& line) {
  static const char* names[] = {"error", "warn", "info", "debug", "trace"};
  std::cerr << "[vsn:" << names[static_cast<int>(level)] << "] " << line << "\n";
}

}  // namespace vsn::log
