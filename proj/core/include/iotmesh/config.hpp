#ifndef IOTMESH_CONFIG_HPP
#define IOTMESH_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iotmesh/logging.hpp"

namespace iotmesh {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct BridgeConfig {
  bool enabled = false;
  Endpoint listen{"127.0.0.1", 0};

  friend bool operator==(const BridgeConfig&, const BridgeConfig&) = default;
};

// Everything the router process needs, loadable from one YAML file.
// Schema is documented in docs/config.md; unknown keys are rejected.
struct RouterConfig {
  std::vector<std::string> realms;
  Endpoint listen{"127.0.0.1", 9000};
  BridgeConfig rest_bridge;
  LogLevel log_level = LogLevel::Info;
  int call_timeout_ms = 30000;

  friend bool operator==(const RouterConfig&, const RouterConfig&) = default;
};

// Throws ConfigNotFound / ConfigParse / ConfigInvalid (naming the offending key).
RouterConfig load_config(const std::filesystem::path& path);

// Same validation the loader applies; programmatically built configs can opt in.
void validate_config(const RouterConfig& config);

}  // namespace iotmesh

#endif
