#pragma once

// Structured logging: one JSON object per line on stderr.

#include <string_view>

#include <json.hpp>

namespace exosolve::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();
/// "debug" | "info" | "warn" | "error" | "off"; returns false for anything else.
bool parse_level(std::string_view text, Level& out);

void emit(Level level, std::string_view event, nlohmann::json fields = nlohmann::json::object());

inline void debug(std::string_view event, nlohmann::json f = nlohmann::json::object()) { emit(Level::Debug, event, std::move(f)); }
inline void info(std::string_view event, nlohmann::json f = nlohmann::json::object()) { emit(Level::Info, event, std::move(f)); }
inline void warn(std::string_view event, nlohmann::json f = nlohmann::json::object()) { emit(Level::Warn, event, std::move(f)); }
inline void error(std::string_view event, nlohmann::json f = nlohmann::json::object()) { emit(Level::Error, event, std::move(f)); }

}  // namespace exosolve::log
