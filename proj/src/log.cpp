#include "flowsim/log.hpp"

#include <cstdlib>
#include <iostream>

namespace flowsim {

LogLevel log_level() {
    static LogLevel level = [] {
        const char *env = std::getenv("FLOWSIM_LOG");
        if (!env) return LogLevel::Warn;
        std::string s(env);
        if (s == "error") return LogLevel::Error;
        if (s == "warn") return LogLevel::Warn;
        if (s == "info") return LogLevel::Info;
        if (s == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

void log_message(LogLevel level, const std::string &msg) {
    if (level > log_level()) return;
    static const char *names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

}  // namespace flowsim
