#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace specpipe {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Level comes from SPECPIPE_LOG (debug|info|warn|error), default warn.
inline LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SPECPIPE_LOG");
    if (env == nullptr) return LogLevel::Warn;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log_line(LogLevel level, const std::string& message) {
  if (level < log_threshold()) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], message.c_str());
}

inline void log_debug(const std::string& m) { log_line(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log_line(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log_line(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log_line(LogLevel::Error, m); }

}  // namespace specpipe
