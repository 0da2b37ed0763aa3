#ifndef IOTMESH_VALUE_HPP
#define IOTMESH_VALUE_HPP

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

namespace iotmesh {

using Json = nlohmann::json;

// Application payloads are string-keyed maps of scalars, lists and maps.
using Payload = Json;

// True for any value the wire codec can carry losslessly: objects/arrays of
// scalars, with all numbers finite (NaN/inf would serialize as null).
inline bool is_wire_value(const Json& v) {
  switch (v.type()) {
    case Json::value_t::object:
    case Json::value_t::array:
      for (const auto& item : v) {
        if (!is_wire_value(item)) return false;
      }
      return true;
    case Json::value_t::number_float:
      return std::isfinite(v.get<double>());
    case Json::value_t::null:
    case Json::value_t::boolean:
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
    case Json::value_t::string:
      return true;
    default:
      return false;  // binary, discarded
  }
}

inline bool is_valid_payload(const Json& v) { return v.is_object() && is_wire_value(v); }

// Stable compact serialization: nlohmann objects iterate key-sorted, so two
// equal values always dump to identical bytes.
inline std::string canonical_dump(const Json& v) { return v.dump(); }

}  // namespace iotmesh

#endif
