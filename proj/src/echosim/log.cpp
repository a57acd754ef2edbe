#include "echosim/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace echosim::log {
namespace {
std::atomic<Level> g_level{Level::kWarn};
std::mutex g_mu;

const char* tag(Level l) {
  switch (l) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    case Level::kOff: return "";
  }
  return "";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void write(Level l, std::string_view message) {
  if (l < g_level.load() || l == Level::kOff) return;
  std::lock_guard lock(g_mu);
  std::cerr << "[echosim " << tag(l) << "] " << message << '\n';
}

}  // namespace echosim::log
