#include "fluoroforge/log.hpp"

#include <iostream>
#include <mutex>

namespace fluoroforge {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

std::function<void(LogLevel, const std::string&)>& sink() {
    static std::function<void(LogLevel, const std::string&)> s = [](LogLevel level, const std::string& msg) {
        static constexpr const char* names[] = {"info", "warning", "error"};
        std::cerr << "fluoroforge " << names[int(level)] << ": " << msg << '\n';
    };
    return s;
}

}  // namespace

void set_log_sink(std::function<void(LogLevel, const std::string&)> s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void log(LogLevel level, const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(level, message);
}

}  // namespace fluoroforge
