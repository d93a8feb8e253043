#include "hisd/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace hisd::log {

namespace {

Level parse_env() {
  const char* raw = std::getenv("HISD_LOG_LEVEL");
  if (raw == nullptr) return Level::Info;
  std::string_view v(raw);
  if (v == "debug") return Level::Debug;
  if (v == "info") return Level::Info;
  if (v == "warn" || v == "warning") return Level::Warn;
  if (v == "error") return Level::Error;
  return Level::Info;
}

Level& threshold() {
  static Level level = parse_env();
  return level;
}

const char* tag(Level level) {
  switch (level) {
    case Level::Debug: return "[DEBUG] ";
    case Level::Info: return "";
    case Level::Warn: return "[WARNING] ";
    case Level::Error: return "[ERROR] ";
  }
  return "";
}

}  // namespace

void set_level(Level level) { threshold() = level; }

Level level() { return threshold(); }

void emit(Level level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(threshold())) return;
  std::cerr << tag(level) << message << "\n";
}

}  // namespace hisd::log
