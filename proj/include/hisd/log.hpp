#pragma once

#include <string>

namespace hisd::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Threshold below which messages are dropped. Initialized from the
// HISD_LOG_LEVEL environment variable (debug|info|warn|error) on first use.
void set_level(Level level);
Level level();

void emit(Level level, const std::string& message);

inline void debug(const std::string& m) { emit(Level::Debug, m); }
inline void info(const std::string& m) { emit(Level::Info, m); }
inline void warn(const std::string& m) { emit(Level::Warn, m); }
inline void error(const std::string& m) { emit(Level::Error, m); }

}  // namespace hisd::log
