#include "combinterp/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace combinterp::log {

namespace {
std::atomic<Level> g_level{Level::warning};
std::mutex g_mutex;

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warning: return "warning";
    case Level::error: return "error";
    case Level::off: break;
  }
  return "";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level lvl, std::string_view message) {
  if (lvl < g_level.load() || lvl == Level::off) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[combinterp " << tag(lvl) << "] " << message << '\n';
}

}  // namespace combinterp::log
