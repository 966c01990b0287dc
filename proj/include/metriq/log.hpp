#ifndef METRIQ_LOG_HPP
#define METRIQ_LOG_HPP

#include <string>

namespace metriq::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Current level, initialized once from METRIQ_LOG (error|info|debug;
/// default info).
Level level();
void set_level(Level lv);
bool enabled(Level lv);

void error(const std::string& msg);
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace metriq::log

#endif
