#include "iotmesh/config.hpp"

#include <yaml-cpp/yaml.h>

#include "iotmesh/errors.hpp"
#include "iotmesh/protocol.hpp"

namespace iotmesh {

namespace {

void reject_unknown_keys(const YAML::Node& map, std::initializer_list<const char*> allowed,
                         const std::string& scope) {
  for (const auto& entry : map) {
    const auto key = entry.first.as<std::string>();
    bool ok = false;
    for (const char* name : allowed) {
      if (key == name) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigInvalid("unknown key `" + (scope.empty() ? key : scope + "." + key) + "`");
    }
  }
}

int read_int(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<int>();
  } catch (const YAML::Exception&) {
    throw ConfigInvalid("key `" + key + "` must be an integer");
  }
}

Endpoint read_endpoint(const YAML::Node& node, const std::string& scope) {
  if (!node.IsMap()) throw ConfigInvalid("key `" + scope + "` must be a map");
  reject_unknown_keys(node, {"host", "port"}, scope);
  Endpoint ep;
  if (node["host"]) ep.host = node["host"].as<std::string>();
  if (!node["port"]) throw ConfigInvalid("key `" + scope + ".port` is required");
  const int port = read_int(node["port"], scope + ".port");
  if (port < 1 || port > 65535) {
    throw ConfigInvalid("key `" + scope + ".port` must be in [1, 65535]");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

bool is_uri_segment(const std::string& s) {
  return !s.empty() && validate_uri(s) && s.find('.') == std::string::npos;
}

}  // namespace

void validate_config(const RouterConfig& config) {
  if (config.realms.empty()) throw ConfigInvalid("key `realms` must list at least one realm");
  for (const auto& realm : config.realms) {
    if (!is_uri_segment(realm)) {
      throw ConfigInvalid("realm `" + realm + "` is not a valid uri segment");
    }
  }
  if (config.listen.port < 1) throw ConfigInvalid("key `listen.port` must be in [1, 65535]");
  if (config.rest_bridge.enabled && config.rest_bridge.listen.port < 1) {
    throw ConfigInvalid("key `rest_bridge.listen.port` must be in [1, 65535]");
  }
  if (config.call_timeout_ms <= 0) {
    throw ConfigInvalid("key `call_timeout_ms` must be positive");
  }
}

RouterConfig load_config(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw ConfigNotFound("config file not found: " + path.string());
  }

  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigParse("cannot parse " + path.string() + ": " + e.what());
  }
  if (!root.IsMap()) throw ConfigParse("config root must be a map");

  reject_unknown_keys(root, {"realms", "listen", "rest_bridge", "log_level", "call_timeout_ms"},
                      "");

  RouterConfig config;

  const YAML::Node realms = root["realms"];
  if (!realms || !realms.IsSequence()) {
    throw ConfigInvalid("key `realms` must be a list of realm names");
  }
  for (const auto& item : realms) {
    config.realms.push_back(item.as<std::string>());
  }

  if (root["listen"]) config.listen = read_endpoint(root["listen"], "listen");

  if (const YAML::Node bridge = root["rest_bridge"]) {
    if (!bridge.IsMap()) throw ConfigInvalid("key `rest_bridge` must be a map");
    reject_unknown_keys(bridge, {"enabled", "listen"}, "rest_bridge");
    if (bridge["enabled"]) config.rest_bridge.enabled = bridge["enabled"].as<bool>();
    if (bridge["listen"]) {
      config.rest_bridge.listen = read_endpoint(bridge["listen"], "rest_bridge.listen");
    } else if (config.rest_bridge.enabled) {
      throw ConfigInvalid("key `rest_bridge.listen` is required when the bridge is enabled");
    }
  }

  if (root["log_level"]) {
    config.log_level = logging::parse_level(root["log_level"].as<std::string>());
  }
  if (root["call_timeout_ms"]) {
    config.call_timeout_ms = read_int(root["call_timeout_ms"], "call_timeout_ms");
  }

  validate_config(config);
  return config;
}

}  // namespace iotmesh
