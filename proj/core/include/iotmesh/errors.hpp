#ifndef IOTMESH_ERRORS_HPP
#define IOTMESH_ERRORS_HPP

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace iotmesh {

// Reason URIs carried by ERROR frames. The full mapping of reasons to
// HTTP statuses lives in docs/protocol.md.
namespace errs {
inline constexpr const char* no_such_realm = "err.no_such_realm";
inline constexpr const char* invalid_uri = "err.invalid_uri";
inline constexpr const char* no_such_procedure = "err.no_such_procedure";
inline constexpr const char* procedure_already_exists = "err.procedure_already_exists";
inline constexpr const char* no_such_registration = "err.no_such_registration";
inline constexpr const char* no_such_subscription = "err.no_such_subscription";
inline constexpr const char* callee_gone = "err.callee_gone";
inline constexpr const char* timeout = "err.timeout";
inline constexpr const char* handler_failed = "err.handler_failed";
inline constexpr const char* bad_payload = "err.bad_payload";
inline constexpr const char* no_utterance = "err.no_utterance";
inline constexpr const char* exercise_in_progress = "err.exercise_in_progress";
inline constexpr const char* no_such_exercise = "err.no_such_exercise";
inline constexpr const char* no_exercises_yet = "err.no_exercises_yet";
inline constexpr const char* pad_busy = "err.pad_busy";
inline constexpr const char* no_such_pad = "err.no_such_pad";
inline constexpr const char* protocol_violation = "err.protocol_violation";
inline constexpr const char* goodbye_out = "goodbye.out";
}  // namespace errs

// Codec faults.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedFrame : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class UnknownKind : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class InvalidMessage : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Config faults.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigNotFound : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ConfigParse : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ConfigInvalid : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Peer connection faults.
class ConnectFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RealmRejected : public ConnectFailed {
 public:
  using ConnectFailed::ConnectFailed;
};

class ConnectionLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A routed error: thrown by call() on an ERROR reply, and thrown inside
// registration handlers to put a specific reason URI on the wire.
class CallError : public std::runtime_error {
 public:
  CallError(std::string reason, nlohmann::json payload = nlohmann::json::object())
      : std::runtime_error(reason), reason_(std::move(reason)), payload_(std::move(payload)) {}

  const std::string& reason() const { return reason_; }
  const nlohmann::json& payload() const { return payload_; }

 private:
  std::string reason_;
  nlohmann::json payload_;
};

}  // namespace iotmesh

#endif
