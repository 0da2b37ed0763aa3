#include "iotmesh/logging.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>

#include "iotmesh/datetime.hpp"

namespace iotmesh::logging {

namespace {

std::atomic<LogLevel> g_level{[] {
  const char* env = std::getenv("IOTMESH_LOG");
  return env ? parse_level(env) : LogLevel::Info;
}()};

std::mutex g_write_mutex;

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::Trace: return "trace";
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    case LogLevel::Error: return "error";
    default: return "off";
  }
}

bool needs_quoting(const std::string& value) {
  if (value.empty()) return true;
  return value.find_first_of(" \t\"") != std::string::npos;
}

}  // namespace

void set_level(LogLevel level) { g_level.store(level); }

LogLevel level() { return g_level.load(); }

LogLevel parse_level(std::string_view name) {
  if (name == "trace") return LogLevel::Trace;
  if (name == "debug") return LogLevel::Debug;
  if (name == "info") return LogLevel::Info;
  if (name == "warn" || name == "warning") return LogLevel::Warn;
  if (name == "error") return LogLevel::Error;
  if (name == "off" || name == "none") return LogLevel::Off;
  return LogLevel::Info;
}

void write(LogLevel level, std::string_view event, std::initializer_list<Kv> kvs) {
  if (level < g_level.load()) return;
  std::ostringstream line;
  line << iso8601_utc_now() << ' ' << level_name(level) << ' ' << event;
  for (const auto& [key, value] : kvs) {
    line << ' ' << key << '=';
    if (needs_quoting(value)) {
      line << '"';
      for (char c : value) {
        if (c == '"' || c == '\\') line << '\\';
        line << c;
      }
      line << '"';
    } else {
      line << value;
    }
  }
  line << '\n';
  const std::string text = line.str();
  std::lock_guard lock(g_write_mutex);
  std::fputs(text.c_str(), stderr);
}

}  // namespace iotmesh::logging
