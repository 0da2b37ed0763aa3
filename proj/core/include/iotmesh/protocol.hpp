#ifndef IOTMESH_PROTOCOL_HPP
#define IOTMESH_PROTOCOL_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "iotmesh/errors.hpp"
#include "iotmesh/value.hpp"

namespace iotmesh {

// Numeric codes follow the public WAMP basic profile; the frame layouts are
// this project's own (see docs/protocol.md for the full kind/field table).
enum class MessageKind : int {
  Hello = 1,
  Welcome = 2,
  Abort = 3,
  Goodbye = 6,
  Error = 8,
  Publish = 16,
  Published = 17,
  Subscribe = 32,
  Subscribed = 33,
  Unsubscribe = 34,
  Unsubscribed = 35,
  Event = 36,
  Call = 48,
  Result = 50,
  Register = 64,
  Registered = 65,
  Unregister = 66,
  Unregistered = 67,
  Invocation = 68,
  Yield = 70,
};

const char* kind_name(MessageKind kind);

// Request/session/subscription/... identifier, valid in [1, 2^53-1] so it
// survives the wire format's number representation exactly.
using MsgId = std::uint64_t;

inline constexpr MsgId kMaxMsgId = (MsgId{1} << 53) - 1;

inline bool is_valid_msg_id(MsgId id) { return id >= 1 && id <= kMaxMsgId; }

// Lowercase dot-joined segments, e.g. "remedes.exercise.start".
// Segments match [a-z0-9_]+; total length <= 256.
bool validate_uri(std::string_view s);

// One protocol frame. Which fields are meaningful depends on kind:
//   request_id  correlation id; session id in WELCOME, subscription id in EVENT
//   aux_id      second id (subscription/registration/publication id)
//   uri         realm, topic, procedure or error reason
//   details     broker/dealer options or details map
//   payload     application payload (string-keyed map)
// Fields a kind does not use stay at their defaults; the factory functions
// below are the supported way to build valid messages.
struct Message {
  MessageKind kind = MessageKind::Hello;
  MsgId request_id = 0;
  MsgId aux_id = 0;
  std::string uri;
  Json details = Json::object();
  Payload payload = Json::object();

  friend bool operator==(const Message&, const Message&) = default;

  static Message hello(std::string realm, Json details = Json::object());
  static Message welcome(MsgId session_id, Json details = Json::object());
  static Message abort(std::string reason, Json details = Json::object());
  static Message goodbye(std::string reason, Json details = Json::object());
  static Message error(MsgId request_id, std::string reason,
                       Payload payload = Json::object(), Json details = Json::object());
  static Message publish(MsgId request_id, std::string topic, Payload payload,
                         Json options = Json::object());
  static Message published(MsgId request_id, MsgId publication_id);
  static Message subscribe(MsgId request_id, std::string topic, Json options = Json::object());
  static Message subscribed(MsgId request_id, MsgId subscription_id);
  static Message unsubscribe(MsgId request_id, MsgId subscription_id);
  static Message unsubscribed(MsgId request_id);
  static Message event(MsgId subscription_id, MsgId publication_id, Payload payload,
                       Json details = Json::object());
  static Message call(MsgId request_id, std::string procedure, Payload payload,
                      Json options = Json::object());
  static Message result(MsgId request_id, Payload payload, Json details = Json::object());
  static Message register_request(MsgId request_id, std::string procedure,
                                  Json options = Json::object());
  static Message registered(MsgId request_id, MsgId registration_id);
  static Message unregister_request(MsgId request_id, MsgId registration_id);
  static Message unregistered(MsgId request_id);
  static Message invocation(MsgId invocation_id, MsgId registration_id, Payload payload,
                            Json details = Json::object());
  static Message yield(MsgId invocation_id, Payload payload, Json options = Json::object());
};

// Throws InvalidMessage unless every mandatory field for msg.kind is present
// and valid and every non-applicable field is at its default.
void validate_message(const Message& msg);

// One UTF-8 line: a JSON array [code, ...fields] terminated by "\n".
// The single "\n" is the frame delimiter; strings escape interior newlines.
std::string encode(const Message& msg);

// Inverse of encode. Accepts the frame with or without its trailing newline.
// Throws MalformedFrame / UnknownKind / InvalidMessage.
Message decode(std::string_view line);

}  // namespace iotmesh

#endif
