#ifndef IOTMESH_SRC_YAML_UTIL_HPP
#define IOTMESH_SRC_YAML_UTIL_HPP

#include <yaml-cpp/yaml.h>

#include "iotmesh/value.hpp"

namespace iotmesh {

// Converts a parsed YAML tree into the Json value model. Plain scalars are
// tried as bool, integer, double, then string; quoted scalars stay strings.
inline Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar: {
      if (node.Tag() == "!") return node.as<std::string>();  // quoted
      const std::string& raw = node.Scalar();
      if (raw == "true" || raw == "True") return true;
      if (raw == "false" || raw == "False") return false;
      try {
        std::size_t used = 0;
        const long long i = std::stoll(raw, &used);
        if (used == raw.size()) return i;
      } catch (...) {
      }
      try {
        std::size_t used = 0;
        const double d = std::stod(raw, &used);
        if (used == raw.size()) return d;
      } catch (...) {
      }
      return raw;
    }
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& entry : node) obj[entry.first.as<std::string>()] = yaml_to_json(entry.second);
      return obj;
    }
    default:
      return nullptr;
  }
}

}  // namespace iotmesh

#endif
