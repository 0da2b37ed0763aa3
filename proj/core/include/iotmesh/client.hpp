#ifndef IOTMESH_CLIENT_HPP
#define IOTMESH_CLIENT_HPP

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "iotmesh/protocol.hpp"
#include "iotmesh/router.hpp"
#include "iotmesh/transport.hpp"

namespace iotmesh {

// Peer-side session with the router. One connection may be shared across
// threads; calls may run concurrently. Subscription and invocation handlers
// run serially on the connection's dispatch thread, in delivery order --
// a handler must not issue a blocking call() on its own connection (use
// call_async or a second connection instead).
class PeerConnection : public std::enable_shared_from_this<PeerConnection> {
 public:
  using EventHandler = std::function<void(const std::string& topic, const Payload& payload)>;
  using CallHandler = std::function<Payload(const Payload& args)>;

  struct CallOutcome {
    bool ok = false;
    Payload value;         // RESULT payload when ok
    std::string error;     // ERROR reason uri otherwise
    Payload error_payload;
  };
  using CallCallback = std::function<void(CallOutcome)>;

  // In-process connection through a loopback transport (same frame codec
  // and dispatch path as TCP).
  static std::shared_ptr<PeerConnection> connect_local(std::shared_ptr<Router> router,
                                                       std::string realm);
  // TCP connection to a listening router.
  static std::shared_ptr<PeerConnection> connect_tcp(const std::string& host, std::uint16_t port,
                                                     std::string realm);

  ~PeerConnection();
  PeerConnection(const PeerConnection&) = delete;
  PeerConnection& operator=(const PeerConnection&) = delete;

  MsgId session_id() const { return session_id_; }
  bool connected() const;

  // Blocks until RESULT or ERROR. Throws CallError (reason uri from the
  // router or callee) or ConnectionLost.
  Payload call(const std::string& procedure, Payload args = Json::object());
  // Completion runs on the dispatch thread.
  void call_async(const std::string& procedure, Payload args, CallCallback done);

  MsgId subscribe(const std::string& topic, EventHandler handler);
  void unsubscribe(MsgId subscription_id);
  // Waits for the broker ack; returns the publication id.
  MsgId publish(const std::string& topic, Payload payload);

  // Handler exceptions travel back to the caller: a thrown CallError keeps
  // its reason uri, anything else becomes err.handler_failed.
  MsgId register_procedure(const std::string& procedure, CallHandler handler);
  void unregister(MsgId registration_id);

  void close();

  // Outstanding request count; zero once all replies have arrived.
  std::size_t pending_requests() const;

 private:
  struct Outcome {
    bool lost = false;
    Message reply;
  };
  using Completion = std::function<void(Outcome)>;

  PeerConnection() = default;

  void start_dispatch();
  void dispatch_loop();
  void on_frame(const std::string& frame);
  void on_disconnected();
  void handshake(const std::string& realm);
  void handle_invocation(const Message& msg);
  MsgId send_request(Message msg, Completion completion);
  Outcome send_request_and_wait(Message msg);
  Message expect_reply(Message msg, MessageKind kind);
  void send_frame(const Message& msg);
  static void require_uri(const std::string& uri);

  enum class State { Connecting, Open, Aborted, Lost, Closed };

  mutable std::mutex mutex_;
  std::condition_variable state_cv_;
  State state_ = State::Connecting;
  std::string abort_reason_;
  MsgId session_id_ = 0;
  std::atomic<MsgId> next_request_{0};

  std::map<MsgId, Completion> pending_;
  struct Subscription {
    std::string topic;
    EventHandler handler;
  };
  std::map<MsgId, Subscription> subscriptions_;  // by subscription id
  std::map<MsgId, CallHandler> procedures_;      // by registration id

  std::shared_ptr<FrameQueue> inbox_ = std::make_shared<FrameQueue>();
  std::function<void(const std::string&)> transport_send_;
  std::function<void()> transport_close_;
  std::thread dispatch_;
  std::once_flag close_once_;

  // TCP specifics, unused on loopback.
  int fd_ = -1;
  std::thread reader_;
};

}  // namespace iotmesh

#endif
