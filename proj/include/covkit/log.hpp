#pragma once

#include <functional>
#include <iostream>
#include <string_view>

namespace covkit {

enum class LogLevel { Debug, Info, Warn };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Process-wide sink; warnings go to stderr unless replaced.
inline LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, std::string_view msg) {
    if (level == LogLevel::Warn) std::clog << "[covkit] warning: " << msg << '\n';
  };
  return sink;
}

inline void set_log_sink(LogSink sink) { log_sink() = std::move(sink); }

inline void log(LogLevel level, std::string_view msg) {
  if (auto& s = log_sink()) s(level, msg);
}

inline void warn(std::string_view msg) { log(LogLevel::Warn, msg); }

}  // namespace covkit
