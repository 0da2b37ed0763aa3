#include "iotmesh/client.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <future>

#include "iotmesh/logging.hpp"
#include "iotmesh/tcp.hpp"

namespace iotmesh {

namespace {

class LoopbackLink : public PeerLink {
 public:
  explicit LoopbackLink(std::shared_ptr<FrameQueue> inbox) : inbox_(std::move(inbox)) {}

  void send_frame(const std::string& frame) override { inbox_->push(frame); }
  void close_link() override { inbox_->close(); }
  std::string describe() const override { return "loopback"; }

 private:
  std::shared_ptr<FrameQueue> inbox_;
};

constexpr auto kHandshakeDeadline = std::chrono::seconds(10);

// `{}` at a call site builds a null json; treat it as the empty map.
Payload normalized(Payload payload) {
  if (payload.is_null()) return Json::object();
  return payload;
}

}  // namespace

std::shared_ptr<PeerConnection> PeerConnection::connect_local(std::shared_ptr<Router> router,
                                                              std::string realm) {
  auto conn = std::shared_ptr<PeerConnection>(new PeerConnection());
  auto session = router->attach(std::make_shared<LoopbackLink>(conn->inbox_));
  conn->transport_send_ = [session](const std::string& frame) { session->deliver(frame); };
  conn->transport_close_ = [session, inbox = conn->inbox_] {
    inbox->close();
    session->transport_closed();
  };
  conn->start_dispatch();
  conn->handshake(realm);
  return conn;
}

std::shared_ptr<PeerConnection> PeerConnection::connect_tcp(const std::string& host,
                                                            std::uint16_t port,
                                                            std::string realm) {
  const int fd = net::tcp_connect(host, port);
  if (fd < 0) {
    throw ConnectFailed("cannot connect to " + host + ":" + std::to_string(port));
  }
  auto conn = std::shared_ptr<PeerConnection>(new PeerConnection());
  conn->fd_ = fd;
  conn->transport_send_ = [fd](const std::string& frame) { net::send_all(fd, frame); };
  conn->transport_close_ = [fd] { ::shutdown(fd, SHUT_RDWR); };
  conn->reader_ = std::thread([fd, inbox = conn->inbox_] {
    std::string pending;
    char buf[4096];
    while (true) {
      const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
      if (n <= 0) break;
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t pos = 0;
      while ((pos = pending.find('\n')) != std::string::npos) {
        inbox->push(pending.substr(0, pos));
        pending.erase(0, pos + 1);
      }
    }
    inbox->close();
  });
  conn->start_dispatch();
  conn->handshake(realm);
  return conn;
}

PeerConnection::~PeerConnection() {
  close();
  if (dispatch_.joinable()) {
    if (dispatch_.get_id() == std::this_thread::get_id()) {
      dispatch_.detach();
    } else {
      dispatch_.join();
    }
  }
  if (reader_.joinable()) reader_.join();
  if (fd_ >= 0) ::close(fd_);
}

bool PeerConnection::connected() const {
  std::lock_guard lock(mutex_);
  return state_ == State::Open;
}

void PeerConnection::start_dispatch() {
  dispatch_ = std::thread([this] { dispatch_loop(); });
}

void PeerConnection::dispatch_loop() {
  while (auto frame = inbox_->pop()) {
    on_frame(*frame);
  }
  on_disconnected();
}

void PeerConnection::handshake(const std::string& realm) {
  if (!validate_uri(realm)) throw RealmRejected("realm is not a valid uri: " + realm);
  send_frame(Message::hello(realm));
  std::unique_lock lock(mutex_);
  state_cv_.wait_for(lock, kHandshakeDeadline, [this] { return state_ != State::Connecting; });
  if (state_ == State::Open) return;
  if (state_ == State::Aborted && abort_reason_ == errs::no_such_realm) {
    throw RealmRejected("realm rejected: " + abort_reason_);
  }
  throw ConnectFailed(abort_reason_.empty() ? "connection lost during handshake"
                                            : "aborted: " + abort_reason_);
}

void PeerConnection::on_frame(const std::string& frame) {
  Message msg;
  try {
    msg = decode(frame);
  } catch (const ProtocolError& e) {
    logging::warn("client.bad_frame", {{"what", e.what()}});
    return;
  }

  switch (msg.kind) {
    case MessageKind::Welcome: {
      std::lock_guard lock(mutex_);
      session_id_ = msg.request_id;
      state_ = State::Open;
      state_cv_.notify_all();
      return;
    }
    case MessageKind::Abort: {
      std::lock_guard lock(mutex_);
      abort_reason_ = msg.uri;
      if (state_ == State::Connecting) state_ = State::Aborted;
      state_cv_.notify_all();
      return;
    }
    case MessageKind::Goodbye:
      // Router acknowledged our goodbye (or closed us); the link drops next.
      return;
    case MessageKind::Event: {
      EventHandler handler;
      std::string topic;
      {
        std::lock_guard lock(mutex_);
        auto it = subscriptions_.find(msg.request_id);
        if (it == subscriptions_.end()) return;  // unsubscribed meanwhile
        handler = it->second.handler;
        topic = it->second.topic;
      }
      handler(topic, msg.payload);
      return;
    }
    case MessageKind::Invocation:
      handle_invocation(msg);
      return;
    case MessageKind::Result:
    case MessageKind::Error:
    case MessageKind::Subscribed:
    case MessageKind::Unsubscribed:
    case MessageKind::Registered:
    case MessageKind::Unregistered:
    case MessageKind::Published: {
      Completion completion;
      {
        std::lock_guard lock(mutex_);
        auto it = pending_.find(msg.request_id);
        if (it == pending_.end()) return;
        completion = std::move(it->second);
        pending_.erase(it);
      }
      completion(Outcome{false, msg});
      return;
    }
    default:
      logging::warn("client.unexpected_kind", {{"kind", kind_name(msg.kind)}});
  }
}

void PeerConnection::handle_invocation(const Message& msg) {
  CallHandler handler;
  {
    std::lock_guard lock(mutex_);
    auto it = procedures_.find(msg.aux_id);
    if (it != procedures_.end()) handler = it->second;
  }
  if (!handler) {
    send_frame(Message::error(msg.request_id, errs::no_such_registration));
    return;
  }
  try {
    Payload result = normalized(handler(msg.payload));
    if (!is_valid_payload(result)) {
      throw CallError(errs::handler_failed, {{"what", "handler returned a non-map payload"}});
    }
    send_frame(Message::yield(msg.request_id, std::move(result)));
  } catch (const CallError& e) {
    send_frame(Message::error(msg.request_id, e.reason(), e.payload()));
  } catch (const std::exception& e) {
    send_frame(Message::error(msg.request_id, errs::handler_failed, {{"what", e.what()}}));
  }
}

void PeerConnection::on_disconnected() {
  std::map<MsgId, Completion> pending;
  {
    std::lock_guard lock(mutex_);
    if (state_ == State::Connecting) state_ = State::Lost;
    if (state_ == State::Open) state_ = State::Lost;
    pending.swap(pending_);
    state_cv_.notify_all();
  }
  for (auto& [id, completion] : pending) completion(Outcome{true, {}});
}

void PeerConnection::send_frame(const Message& msg) { transport_send_(encode(msg)); }

MsgId PeerConnection::send_request(Message msg, Completion completion) {
  const MsgId id = msg.request_id;
  {
    std::lock_guard lock(mutex_);
    if (state_ != State::Open && state_ != State::Connecting) {
      throw ConnectionLost("connection is closed");
    }
    pending_.emplace(id, std::move(completion));
  }
  try {
    send_frame(msg);
  } catch (...) {
    std::lock_guard lock(mutex_);
    pending_.erase(id);
    throw;
  }
  return id;
}

PeerConnection::Outcome PeerConnection::send_request_and_wait(Message msg) {
  auto promise = std::make_shared<std::promise<Outcome>>();
  auto future = promise->get_future();
  send_request(std::move(msg), [promise](Outcome outcome) { promise->set_value(std::move(outcome)); });
  return future.get();
}

Message PeerConnection::expect_reply(Message msg, MessageKind kind) {
  Outcome outcome = send_request_and_wait(std::move(msg));
  if (outcome.lost) throw ConnectionLost("connection lost while waiting for reply");
  if (outcome.reply.kind == MessageKind::Error) {
    throw CallError(outcome.reply.uri, outcome.reply.payload);
  }
  if (outcome.reply.kind != kind) {
    throw ProtocolError(std::string("unexpected reply ") + kind_name(outcome.reply.kind));
  }
  return outcome.reply;
}

void PeerConnection::require_uri(const std::string& uri) {
  if (!validate_uri(uri)) throw CallError(errs::invalid_uri, {{"uri", uri}});
}

Payload PeerConnection::call(const std::string& procedure, Payload args) {
  require_uri(procedure);
  args = normalized(std::move(args));
  if (!is_valid_payload(args)) throw CallError(errs::bad_payload);
  const MsgId id = ++next_request_;
  Message reply = expect_reply(Message::call(id, procedure, std::move(args)),
                               MessageKind::Result);
  return reply.payload;
}

void PeerConnection::call_async(const std::string& procedure, Payload args, CallCallback done) {
  require_uri(procedure);
  args = normalized(std::move(args));
  if (!is_valid_payload(args)) throw CallError(errs::bad_payload);
  const MsgId id = ++next_request_;
  send_request(Message::call(id, procedure, std::move(args)), [done](Outcome outcome) {
    CallOutcome result;
    if (outcome.lost) {
      result.error = "err.connection_lost";
    } else if (outcome.reply.kind == MessageKind::Result) {
      result.ok = true;
      result.value = outcome.reply.payload;
    } else {
      result.error = outcome.reply.uri;
      result.error_payload = outcome.reply.payload;
    }
    done(std::move(result));
  });
}

MsgId PeerConnection::subscribe(const std::string& topic, EventHandler handler) {
  require_uri(topic);
  const MsgId id = ++next_request_;
  auto promise = std::make_shared<std::promise<Outcome>>();
  auto future = promise->get_future();
  // The handler is installed on the dispatch thread before any queued EVENT
  // behind the SUBSCRIBED ack is processed.
  send_request(Message::subscribe(id, topic),
               [this, topic, handler = std::move(handler), promise](Outcome outcome) {
                 if (!outcome.lost && outcome.reply.kind == MessageKind::Subscribed) {
                   std::lock_guard lock(mutex_);
                   subscriptions_[outcome.reply.aux_id] = {topic, handler};
                 }
                 promise->set_value(std::move(outcome));
               });
  Outcome outcome = future.get();
  if (outcome.lost) throw ConnectionLost("connection lost while subscribing");
  if (outcome.reply.kind == MessageKind::Error) {
    throw CallError(outcome.reply.uri, outcome.reply.payload);
  }
  return outcome.reply.aux_id;
}

void PeerConnection::unsubscribe(MsgId subscription_id) {
  const MsgId id = ++next_request_;
  auto promise = std::make_shared<std::promise<Outcome>>();
  auto future = promise->get_future();
  send_request(Message::unsubscribe(id, subscription_id),
               [this, subscription_id, promise](Outcome outcome) {
                 if (!outcome.lost && outcome.reply.kind == MessageKind::Unsubscribed) {
                   std::lock_guard lock(mutex_);
                   subscriptions_.erase(subscription_id);
                 }
                 promise->set_value(std::move(outcome));
               });
  Outcome outcome = future.get();
  if (outcome.lost) throw ConnectionLost("connection lost while unsubscribing");
  if (outcome.reply.kind == MessageKind::Error) {
    throw CallError(outcome.reply.uri, outcome.reply.payload);
  }
}

MsgId PeerConnection::publish(const std::string& topic, Payload payload) {
  require_uri(topic);
  payload = normalized(std::move(payload));
  if (!is_valid_payload(payload)) throw CallError(errs::bad_payload);
  const MsgId id = ++next_request_;
  Message reply = expect_reply(Message::publish(id, topic, std::move(payload)),
                               MessageKind::Published);
  return reply.aux_id;
}

MsgId PeerConnection::register_procedure(const std::string& procedure, CallHandler handler) {
  require_uri(procedure);
  const MsgId id = ++next_request_;
  auto promise = std::make_shared<std::promise<Outcome>>();
  auto future = promise->get_future();
  send_request(Message::register_request(id, procedure),
               [this, handler = std::move(handler), promise](Outcome outcome) {
                 if (!outcome.lost && outcome.reply.kind == MessageKind::Registered) {
                   std::lock_guard lock(mutex_);
                   procedures_[outcome.reply.aux_id] = handler;
                 }
                 promise->set_value(std::move(outcome));
               });
  Outcome outcome = future.get();
  if (outcome.lost) throw ConnectionLost("connection lost while registering");
  if (outcome.reply.kind == MessageKind::Error) {
    throw CallError(outcome.reply.uri, outcome.reply.payload);
  }
  return outcome.reply.aux_id;
}

void PeerConnection::unregister(MsgId registration_id) {
  const MsgId id = ++next_request_;
  auto promise = std::make_shared<std::promise<Outcome>>();
  auto future = promise->get_future();
  send_request(Message::unregister_request(id, registration_id),
               [this, registration_id, promise](Outcome outcome) {
                 if (!outcome.lost && outcome.reply.kind == MessageKind::Unregistered) {
                   std::lock_guard lock(mutex_);
                   procedures_.erase(registration_id);
                 }
                 promise->set_value(std::move(outcome));
               });
  Outcome outcome = future.get();
  if (outcome.lost) throw ConnectionLost("connection lost while unregistering");
  if (outcome.reply.kind == MessageKind::Error) {
    throw CallError(outcome.reply.uri, outcome.reply.payload);
  }
}

void PeerConnection::close() {
  std::call_once(close_once_, [this] {
    bool was_open = false;
    {
      std::lock_guard lock(mutex_);
      was_open = state_ == State::Open;
      if (state_ == State::Open || state_ == State::Connecting) state_ = State::Closed;
    }
    if (was_open) {
      try {
        send_frame(Message::goodbye(errs::goodbye_out));
      } catch (...) {
      }
    }
    if (transport_close_) transport_close_();
  });
}

std::size_t PeerConnection::pending_requests() const {
  std::lock_guard lock(mutex_);
  return pending_.size();
}

}  // namespace iotmesh
