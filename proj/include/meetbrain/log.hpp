#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace meetbrain::log {

enum class Level { Debug, Info, Warn, Error };

// Process-wide settings. JSON mode emits one object per line on stderr.
void set_json(bool enabled);
void set_min_level(Level level);
void set_quiet(bool quiet);

void write(Level level, std::string_view message, const nlohmann::json& fields = {});

inline void info(std::string_view m, const nlohmann::json& f = {}) { write(Level::Info, m, f); }
inline void warn(std::string_view m, const nlohmann::json& f = {}) { write(Level::Warn, m, f); }
inline void debug(std::string_view m, const nlohmann::json& f = {}) { write(Level::Debug, m, f); }

}  // namespace meetbrain::log
