#ifndef IOTMESH_LOGGING_HPP
#define IOTMESH_LOGGING_HPP

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace iotmesh {

enum class LogLevel { Trace = 0, Debug, Info, Warn, Error, Off };

// Line format: <ISO8601> <level> <event> <k=v ...>, written to stderr.
// Initial level comes from the IOTMESH_LOG environment variable.
namespace logging {

using Kv = std::pair<std::string_view, std::string>;

void set_level(LogLevel level);
LogLevel level();
LogLevel parse_level(std::string_view name);  // unknown names fall back to Info

void write(LogLevel level, std::string_view event, std::initializer_list<Kv> kvs = {});

inline void debug(std::string_view event, std::initializer_list<Kv> kvs = {}) {
  write(LogLevel::Debug, event, kvs);
}
inline void info(std::string_view event, std::initializer_list<Kv> kvs = {}) {
  write(LogLevel::Info, event, kvs);
}
inline void warn(std::string_view event, std::initializer_list<Kv> kvs = {}) {
  write(LogLevel::Warn, event, kvs);
}
inline void error(std::string_view event, std::initializer_list<Kv> kvs = {}) {
  write(LogLevel::Error, event, kvs);
}

}  // namespace logging
}  // namespace iotmesh

#endif
