#pragma once

#include <functional>
#include <string>

namespace fluoroforge {

enum class LogLevel { info, warning, error };

// Process-wide sink; defaults to stderr. Thread-safe.
void set_log_sink(std::function<void(LogLevel, const std::string&)> sink);
void log(LogLevel level, const std::string& message);
inline void log_warning(const std::string& message) { log(LogLevel::warning, message); }
inline void log_info(const std::string& message) { log(LogLevel::info, message); }

}  // namespace fluoroforge
