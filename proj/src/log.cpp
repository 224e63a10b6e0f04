#include "meetbrain/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace meetbrain::log {
namespace {
std::atomic<bool> g_json{false};
std::atomic<bool> g_quiet{false};
std::atomic<int> g_min{static_cast<int>(Level::Info)};
std::mutex g_mu;

const char* name(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "info";
}
}  // namespace

void set_json(bool enabled) { g_json = enabled; }
void set_min_level(Level level) { g_min = static_cast<int>(level); }
void set_quiet(bool quiet) { g_quiet = quiet; }

void write(Level level, std::string_view message, const nlohmann::json& fields) {
  if (g_quiet || static_cast<int>(level) < g_min) return;
  std::lock_guard lock(g_mu);
  if (g_json) {
    nlohmann::json line = {{"level", name(level)}, {"msg", message}};
    if (fields.is_object())
      for (auto& [k, v] : fields.items()) line[k] = v;
    std::cerr << line.dump() << '\n';
  } else {
    std::cerr << '[' << name(level) << "] " << message;
    if (fields.is_object() && !fields.empty()) std::cerr << ' ' << fields.dump();
    std::cerr << '\n';
  }
}

}  // namespace meetbrain::log
