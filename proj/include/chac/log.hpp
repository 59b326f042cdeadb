#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

// Minimal stderr logger; level comes from CHAC_LOG (debug|info|warn|error|quiet,
// default warn).
namespace chac::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, quiet = 4 };

inline Level threshold() {
    static const Level lvl = [] {
        const char* env = std::getenv("CHAC_LOG");
        if (env == nullptr) return Level::warn;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        if (std::strcmp(env, "info") == 0) return Level::info;
        if (std::strcmp(env, "warn") == 0) return Level::warn;
        if (std::strcmp(env, "error") == 0) return Level::error;
        if (std::strcmp(env, "quiet") == 0) return Level::quiet;
        return Level::warn;
    }();
    return lvl;
}

template <class... Args>
void emit(Level lvl, const char* tag, const char* fmt, Args... args) {
    if (lvl < threshold()) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

template <class... Args>
void debug(const char* fmt, Args... args) {
    emit(Level::debug, "debug", fmt, args...);
}
template <class... Args>
void info(const char* fmt, Args... args) {
    emit(Level::info, "info", fmt, args...);
}
template <class... Args>
void warn(const char* fmt, Args... args) {
    emit(Level::warn, "warn", fmt, args...);
}
template <class... Args>
void error(const char* fmt, Args... args) {
    emit(Level::error, "error", fmt, args...);
}

}  // namespace chac::log
