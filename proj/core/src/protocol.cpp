#include "iotmesh/protocol.hpp"

#include <array>
#include <utility>

namespace iotmesh {

namespace {

constexpr std::array<MessageKind, 20> kAllKinds = {
    MessageKind::Hello,        MessageKind::Welcome,    MessageKind::Abort,
    MessageKind::Goodbye,      MessageKind::Error,      MessageKind::Publish,
    MessageKind::Published,    MessageKind::Subscribe,  MessageKind::Subscribed,
    MessageKind::Unsubscribe,  MessageKind::Unsubscribed, MessageKind::Event,
    MessageKind::Call,         MessageKind::Result,     MessageKind::Register,
    MessageKind::Registered,   MessageKind::Unregister, MessageKind::Unregistered,
    MessageKind::Invocation,   MessageKind::Yield,
};

bool known_code(int code) {
  for (MessageKind k : kAllKinds) {
    if (static_cast<int>(k) == code) return true;
  }
  return false;
}

// Which of the generic fields each kind carries.
struct FieldUse {
  bool request_id = false;
  bool aux_id = false;
  bool uri = false;
  bool payload = false;
};

FieldUse fields_for(MessageKind kind) {
  switch (kind) {
    case MessageKind::Hello: return {false, false, true, false};
    case MessageKind::Welcome: return {true, false, false, false};
    case MessageKind::Abort: return {false, false, true, false};
    case MessageKind::Goodbye: return {false, false, true, false};
    case MessageKind::Error: return {true, false, true, true};
    case MessageKind::Publish: return {true, false, true, true};
    case MessageKind::Published: return {true, true, false, false};
    case MessageKind::Subscribe: return {true, false, true, false};
    case MessageKind::Subscribed: return {true, true, false, false};
    case MessageKind::Unsubscribe: return {true, true, false, false};
    case MessageKind::Unsubscribed: return {true, false, false, false};
    case MessageKind::Event: return {true, true, false, true};
    case MessageKind::Call: return {true, false, true, true};
    case MessageKind::Result: return {true, false, false, true};
    case MessageKind::Register: return {true, false, true, false};
    case MessageKind::Registered: return {true, true, false, false};
    case MessageKind::Unregister: return {true, true, false, false};
    case MessageKind::Unregistered: return {true, false, false, false};
    case MessageKind::Invocation: return {true, true, false, true};
    case MessageKind::Yield: return {true, false, false, true};
  }
  throw InvalidMessage("unhandled kind");
}

[[noreturn]] void fail(MessageKind kind, const std::string& what) {
  throw InvalidMessage(std::string(kind_name(kind)) + ": " + what);
}

Message base(MessageKind kind) {
  Message m;
  m.kind = kind;
  return m;
}

MsgId decode_id(const Json& v, MessageKind kind, const char* name) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() > 0)) {
    fail(kind, std::string(name) + " must be a positive integer");
  }
  MsgId id = v.get<MsgId>();
  if (!is_valid_msg_id(id)) fail(kind, std::string(name) + " out of range");
  return id;
}

std::string decode_uri(const Json& v, MessageKind kind, const char* name) {
  if (!v.is_string()) fail(kind, std::string(name) + " must be a string");
  auto s = v.get<std::string>();
  if (!validate_uri(s)) fail(kind, std::string(name) + " is not a valid uri");
  return s;
}

Json decode_map(const Json& v, MessageKind kind, const char* name) {
  if (!v.is_object()) fail(kind, std::string(name) + " must be a map");
  return v;
}

void expect_arity(const Json& arr, MessageKind kind, std::size_t n) {
  if (arr.size() != n) fail(kind, "expected " + std::to_string(n) + " frame fields");
}

}  // namespace

const char* kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::Hello: return "HELLO";
    case MessageKind::Welcome: return "WELCOME";
    case MessageKind::Abort: return "ABORT";
    case MessageKind::Goodbye: return "GOODBYE";
    case MessageKind::Error: return "ERROR";
    case MessageKind::Publish: return "PUBLISH";
    case MessageKind::Published: return "PUBLISHED";
    case MessageKind::Subscribe: return "SUBSCRIBE";
    case MessageKind::Subscribed: return "SUBSCRIBED";
    case MessageKind::Unsubscribe: return "UNSUBSCRIBE";
    case MessageKind::Unsubscribed: return "UNSUBSCRIBED";
    case MessageKind::Event: return "EVENT";
    case MessageKind::Call: return "CALL";
    case MessageKind::Result: return "RESULT";
    case MessageKind::Register: return "REGISTER";
    case MessageKind::Registered: return "REGISTERED";
    case MessageKind::Unregister: return "UNREGISTER";
    case MessageKind::Unregistered: return "UNREGISTERED";
    case MessageKind::Invocation: return "INVOCATION";
    case MessageKind::Yield: return "YIELD";
  }
  return "?";
}

bool validate_uri(std::string_view s) {
  if (s.empty() || s.size() > 256) return false;
  bool segment_open = false;
  for (char c : s) {
    if (c == '.') {
      if (!segment_open) return false;  // empty segment
      segment_open = false;
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_') {
      segment_open = true;
    } else {
      return false;
    }
  }
  return segment_open;  // no trailing dot
}

void validate_message(const Message& msg) {
  if (!known_code(static_cast<int>(msg.kind))) throw InvalidMessage("unknown kind");
  const FieldUse use = fields_for(msg.kind);

  if (use.request_id) {
    if (!is_valid_msg_id(msg.request_id)) fail(msg.kind, "missing or invalid id");
  } else if (msg.request_id != 0) {
    fail(msg.kind, "unexpected id field");
  }

  if (use.aux_id) {
    if (!is_valid_msg_id(msg.aux_id)) fail(msg.kind, "missing or invalid secondary id");
  } else if (msg.aux_id != 0) {
    fail(msg.kind, "unexpected secondary id field");
  }

  if (use.uri) {
    if (!validate_uri(msg.uri)) fail(msg.kind, "missing or invalid uri");
  } else if (!msg.uri.empty()) {
    fail(msg.kind, "unexpected uri field");
  }

  if (!msg.details.is_object() || !is_wire_value(msg.details)) {
    fail(msg.kind, "details must be a wire-safe map");
  }

  if (use.payload) {
    if (!is_valid_payload(msg.payload)) fail(msg.kind, "payload must be a wire-safe map");
  } else if (!(msg.payload.is_object() && msg.payload.empty())) {
    fail(msg.kind, "unexpected payload field");
  }
}

Message Message::hello(std::string realm, Json details) {
  Message m = base(MessageKind::Hello);
  m.uri = std::move(realm);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::welcome(MsgId session_id, Json details) {
  Message m = base(MessageKind::Welcome);
  m.request_id = session_id;
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::abort(std::string reason, Json details) {
  Message m = base(MessageKind::Abort);
  m.uri = std::move(reason);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::goodbye(std::string reason, Json details) {
  Message m = base(MessageKind::Goodbye);
  m.uri = std::move(reason);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::error(MsgId request_id, std::string reason, Payload payload, Json details) {
  Message m = base(MessageKind::Error);
  m.request_id = request_id;
  m.uri = std::move(reason);
  m.payload = std::move(payload);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::publish(MsgId request_id, std::string topic, Payload payload, Json options) {
  Message m = base(MessageKind::Publish);
  m.request_id = request_id;
  m.uri = std::move(topic);
  m.payload = std::move(payload);
  m.details = std::move(options);
  validate_message(m);
  return m;
}

Message Message::published(MsgId request_id, MsgId publication_id) {
  Message m = base(MessageKind::Published);
  m.request_id = request_id;
  m.aux_id = publication_id;
  validate_message(m);
  return m;
}

Message Message::subscribe(MsgId request_id, std::string topic, Json options) {
  Message m = base(MessageKind::Subscribe);
  m.request_id = request_id;
  m.uri = std::move(topic);
  m.details = std::move(options);
  validate_message(m);
  return m;
}

Message Message::subscribed(MsgId request_id, MsgId subscription_id) {
  Message m = base(MessageKind::Subscribed);
  m.request_id = request_id;
  m.aux_id = subscription_id;
  validate_message(m);
  return m;
}

Message Message::unsubscribe(MsgId request_id, MsgId subscription_id) {
  Message m = base(MessageKind::Unsubscribe);
  m.request_id = request_id;
  m.aux_id = subscription_id;
  validate_message(m);
  return m;
}

Message Message::unsubscribed(MsgId request_id) {
  Message m = base(MessageKind::Unsubscribed);
  m.request_id = request_id;
  validate_message(m);
  return m;
}

Message Message::event(MsgId subscription_id, MsgId publication_id, Payload payload,
                       Json details) {
  Message m = base(MessageKind::Event);
  m.request_id = subscription_id;
  m.aux_id = publication_id;
  m.payload = std::move(payload);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::call(MsgId request_id, std::string procedure, Payload payload, Json options) {
  Message m = base(MessageKind::Call);
  m.request_id = request_id;
  m.uri = std::move(procedure);
  m.payload = std::move(payload);
  m.details = std::move(options);
  validate_message(m);
  return m;
}

Message Message::result(MsgId request_id, Payload payload, Json details) {
  Message m = base(MessageKind::Result);
  m.request_id = request_id;
  m.payload = std::move(payload);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::register_request(MsgId request_id, std::string procedure, Json options) {
  Message m = base(MessageKind::Register);
  m.request_id = request_id;
  m.uri = std::move(procedure);
  m.details = std::move(options);
  validate_message(m);
  return m;
}

Message Message::registered(MsgId request_id, MsgId registration_id) {
  Message m = base(MessageKind::Registered);
  m.request_id = request_id;
  m.aux_id = registration_id;
  validate_message(m);
  return m;
}

Message Message::unregister_request(MsgId request_id, MsgId registration_id) {
  Message m = base(MessageKind::Unregister);
  m.request_id = request_id;
  m.aux_id = registration_id;
  validate_message(m);
  return m;
}

Message Message::unregistered(MsgId request_id) {
  Message m = base(MessageKind::Unregistered);
  m.request_id = request_id;
  validate_message(m);
  return m;
}

Message Message::invocation(MsgId invocation_id, MsgId registration_id, Payload payload,
                            Json details) {
  Message m = base(MessageKind::Invocation);
  m.request_id = invocation_id;
  m.aux_id = registration_id;
  m.payload = std::move(payload);
  m.details = std::move(details);
  validate_message(m);
  return m;
}

Message Message::yield(MsgId invocation_id, Payload payload, Json options) {
  Message m = base(MessageKind::Yield);
  m.request_id = invocation_id;
  m.payload = std::move(payload);
  m.details = std::move(options);
  validate_message(m);
  return m;
}

std::string encode(const Message& msg) {
  validate_message(msg);
  Json arr = Json::array();
  arr.push_back(static_cast<int>(msg.kind));
  switch (msg.kind) {
    case MessageKind::Hello:
      arr.push_back(msg.uri);
      arr.push_back(msg.details);
      break;
    case MessageKind::Welcome:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      break;
    case MessageKind::Abort:
    case MessageKind::Goodbye:
      arr.push_back(msg.details);
      arr.push_back(msg.uri);
      break;
    case MessageKind::Error:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      arr.push_back(msg.uri);
      arr.push_back(msg.payload);
      break;
    case MessageKind::Publish:
    case MessageKind::Call:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      arr.push_back(msg.uri);
      arr.push_back(msg.payload);
      break;
    case MessageKind::Published:
    case MessageKind::Subscribed:
    case MessageKind::Unsubscribe:
    case MessageKind::Registered:
    case MessageKind::Unregister:
      arr.push_back(msg.request_id);
      arr.push_back(msg.aux_id);
      break;
    case MessageKind::Subscribe:
    case MessageKind::Register:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      arr.push_back(msg.uri);
      break;
    case MessageKind::Unsubscribed:
    case MessageKind::Unregistered:
      arr.push_back(msg.request_id);
      break;
    case MessageKind::Event:
    case MessageKind::Invocation:
      arr.push_back(msg.request_id);
      arr.push_back(msg.aux_id);
      arr.push_back(msg.details);
      arr.push_back(msg.payload);
      break;
    case MessageKind::Result:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      arr.push_back(msg.payload);
      break;
    case MessageKind::Yield:
      arr.push_back(msg.request_id);
      arr.push_back(msg.details);
      arr.push_back(msg.payload);
      break;
  }
  try {
    return arr.dump() + "\n";
  } catch (const Json::exception& e) {
    throw InvalidMessage(std::string("unserializable field: ") + e.what());
  }
}

Message decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  Json arr;
  try {
    arr = Json::parse(line);
  } catch (const Json::exception& e) {
    throw MalformedFrame(std::string("frame is not valid json: ") + e.what());
  }
  if (!arr.is_array() || arr.empty()) throw MalformedFrame("frame must be a non-empty array");
  if (!arr[0].is_number_integer() && !arr[0].is_number_unsigned()) {
    throw MalformedFrame("kind code must be an integer");
  }
  const int code = arr[0].get<int>();
  if (!known_code(code)) throw UnknownKind("unknown kind code " + std::to_string(code));
  const auto kind = static_cast<MessageKind>(code);

  Message m = base(kind);
  switch (kind) {
    case MessageKind::Hello:
      expect_arity(arr, kind, 3);
      m.uri = decode_uri(arr[1], kind, "realm");
      m.details = decode_map(arr[2], kind, "details");
      break;
    case MessageKind::Welcome:
      expect_arity(arr, kind, 3);
      m.request_id = decode_id(arr[1], kind, "session id");
      m.details = decode_map(arr[2], kind, "details");
      break;
    case MessageKind::Abort:
    case MessageKind::Goodbye:
      expect_arity(arr, kind, 3);
      m.details = decode_map(arr[1], kind, "details");
      m.uri = decode_uri(arr[2], kind, "reason");
      break;
    case MessageKind::Error:
      expect_arity(arr, kind, 5);
      m.request_id = decode_id(arr[1], kind, "request id");
      m.details = decode_map(arr[2], kind, "details");
      m.uri = decode_uri(arr[3], kind, "reason");
      m.payload = decode_map(arr[4], kind, "payload");
      break;
    case MessageKind::Publish:
    case MessageKind::Call:
      expect_arity(arr, kind, 5);
      m.request_id = decode_id(arr[1], kind, "request id");
      m.details = decode_map(arr[2], kind, "options");
      m.uri = decode_uri(arr[3], kind, kind == MessageKind::Publish ? "topic" : "procedure");
      m.payload = decode_map(arr[4], kind, "payload");
      break;
    case MessageKind::Published:
    case MessageKind::Subscribed:
    case MessageKind::Unsubscribe:
    case MessageKind::Registered:
    case MessageKind::Unregister:
      expect_arity(arr, kind, 3);
      m.request_id = decode_id(arr[1], kind, "request id");
      m.aux_id = decode_id(arr[2], kind, "secondary id");
      break;
    case MessageKind::Subscribe:
    case MessageKind::Register:
      expect_arity(arr, kind, 4);
      m.request_id = decode_id(arr[1], kind, "request id");
      m.details = decode_map(arr[2], kind, "options");
      m.uri = decode_uri(arr[3], kind, kind == MessageKind::Subscribe ? "topic" : "procedure");
      break;
    case MessageKind::Unsubscribed:
    case MessageKind::Unregistered:
      expect_arity(arr, kind, 2);
      m.request_id = decode_id(arr[1], kind, "request id");
      break;
    case MessageKind::Event:
    case MessageKind::Invocation:
      expect_arity(arr, kind, 5);
      m.request_id = decode_id(arr[1], kind, "primary id");
      m.aux_id = decode_id(arr[2], kind, "secondary id");
      m.details = decode_map(arr[3], kind, "details");
      m.payload = decode_map(arr[4], kind, "payload");
      break;
    case MessageKind::Result:
    case MessageKind::Yield:
      expect_arity(arr, kind, 4);
      m.request_id = decode_id(arr[1], kind, "request id");
      m.details = decode_map(arr[2], kind, "details");
      m.payload = decode_map(arr[3], kind, "payload");
      break;
  }
  validate_message(m);
  return m;
}

}  // namespace iotmesh
