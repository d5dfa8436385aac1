#include "exosolve/log.hpp"

#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>

namespace exosolve::log {
namespace {

std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

const char* name(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: return "off";
  }
  return "?";
}

}  // namespace

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

bool parse_level(std::string_view text, Level& out) {
  for (Level l : {Level::Debug, Level::Info, Level::Warn, Level::Error, Level::Off}) {
    if (text == name(l)) {
      out = l;
      return true;
    }
  }
  return false;
}

void emit(Level l, std::string_view event, nlohmann::json fields) {
  if (l < g_level.load() || g_level.load() == Level::Off) return;
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now().time_since_epoch());
  nlohmann::json line{{"ts_ms", now.count()}, {"level", name(l)}, {"event", event}};
  if (fields.is_object()) line.update(fields);
  const std::string text = line.dump();
  std::lock_guard lock(g_mutex);
  std::cerr << text << '\n';
}

}  // namespace exosolve::log
