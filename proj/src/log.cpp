#include "metriq/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace metriq::log {

namespace {

Level parse_env() {
    const char* env = std::getenv("METRIQ_LOG");
    if (env == nullptr) return Level::info;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::info;
}

Level g_level = parse_env();

void write(const char* tag, const std::string& msg) {
    std::fprintf(stderr, "[metriq %s] %s\n", tag, msg.c_str());
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }
bool enabled(Level lv) { return static_cast<int>(lv) <= static_cast<int>(g_level); }

void error(const std::string& msg) {
    if (enabled(Level::error)) write("error", msg);
}

void info(const std::string& msg) {
    if (enabled(Level::info)) write("info", msg);
}

void debug(const std::string& msg) {
    if (enabled(Level::debug)) write("debug", msg);
}

}  // namespace metriq::log
