#include "iotmesh/router.hpp"

#include <algorithm>

#include "iotmesh/logging.hpp"

namespace iotmesh {

namespace {

// Best-effort peek at a frame that failed strict decoding: if it is a
// request whose uri field is the only problem, the router can still answer
// with ERROR err.invalid_uri instead of dropping the connection.
struct LenientRequest {
  MessageKind kind;
  MsgId request_id;
};

std::optional<LenientRequest> peek_bad_uri_request(std::string_view line) {
  Json arr = Json::parse(line, nullptr, false);
  if (arr.is_discarded() || !arr.is_array() || arr.size() < 4) return std::nullopt;
  if (!arr[0].is_number_integer() && !arr[0].is_number_unsigned()) return std::nullopt;
  const int code = arr[0].get<int>();
  if (code != static_cast<int>(MessageKind::Subscribe) &&
      code != static_cast<int>(MessageKind::Publish) &&
      code != static_cast<int>(MessageKind::Call) &&
      code != static_cast<int>(MessageKind::Register)) {
    return std::nullopt;
  }
  if (!arr[1].is_number_unsigned()) return std::nullopt;
  const MsgId id = arr[1].get<MsgId>();
  if (!is_valid_msg_id(id)) return std::nullopt;
  if (!arr[3].is_string() || validate_uri(arr[3].get<std::string>())) return std::nullopt;
  return LenientRequest{static_cast<MessageKind>(code), id};
}

}  // namespace

std::shared_ptr<Router> Router::create(RouterConfig config) {
  return std::shared_ptr<Router>(new Router(std::move(config)));
}

Router::Router(RouterConfig config) : config_(std::move(config)) {}

Router::~Router() { stop(); }

std::shared_ptr<RouterSession> Router::attach(std::shared_ptr<PeerLink> link) {
  return std::make_shared<RouterSession>(shared_from_this(), std::move(link));
}

void Router::start() {
  std::lock_guard lock(reaper_mutex_);
  if (reaper_running_) return;
  reaper_running_ = true;
  stopping_ = false;
  reaper_ = std::thread([this] {
    std::unique_lock lock(reaper_mutex_);
    while (!stopping_) {
      reaper_cv_.wait_for(lock, std::chrono::milliseconds(20));
      if (stopping_) break;
      lock.unlock();
      reap_expired_calls();
      lock.lock();
    }
  });
}

void Router::stop() {
  {
    std::lock_guard lock(reaper_mutex_);
    if (!reaper_running_) return;
    stopping_ = true;
    reaper_cv_.notify_all();
  }
  reaper_.join();
  std::lock_guard lock(reaper_mutex_);
  reaper_running_ = false;
}

Router::TableStats Router::stats() const {
  std::lock_guard lock(mutex_);
  TableStats s;
  s.sessions = sessions_.size();
  s.pending_calls = pending_calls_.size();
  for (const auto& [name, realm] : realms_) {
    for (const auto& [topic, subs] : realm.subscriptions) s.subscription_rows += subs.size();
    s.registration_rows += realm.registrations.size();
  }
  return s;
}

bool Router::session_referenced(MsgId session_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& [name, realm] : realms_) {
    for (const auto& [topic, subs] : realm.subscriptions) {
      for (const auto& entry : subs) {
        if (entry.session_id == session_id) return true;
      }
    }
    for (const auto& [proc, reg] : realm.registrations) {
      if (reg.session_id == session_id) return true;
    }
  }
  for (const auto& [inv, call] : pending_calls_) {
    if (call.caller_session == session_id || call.callee_session == session_id) return true;
  }
  return false;
}

MsgId Router::next_id_locked() { return ++next_id_; }

Router::RealmState& Router::realm_locked(const std::string& name) { return realms_[name]; }

void Router::send_to(MsgId session_id, const Message& msg) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return;
  it->second->link_->send_frame(encode(msg));
}

void Router::dispatch(RouterSession& session, const Message& msg) {
  if (!session.open_) {
    if (msg.kind == MessageKind::Hello) {
      handle_hello(session, msg);
    } else {
      protocol_violation(session, "expected HELLO");
    }
    return;
  }
  switch (msg.kind) {
    case MessageKind::Subscribe: handle_subscribe(session, msg); break;
    case MessageKind::Unsubscribe: handle_unsubscribe(session, msg); break;
    case MessageKind::Publish: handle_publish(session, msg); break;
    case MessageKind::Register: handle_register(session, msg); break;
    case MessageKind::Unregister: handle_unregister(session, msg); break;
    case MessageKind::Call: handle_call(session, msg); break;
    case MessageKind::Yield: handle_yield(session, msg); break;
    case MessageKind::Error: handle_callee_error(session, msg); break;
    case MessageKind::Goodbye: handle_goodbye(session, msg); break;
    default:
      protocol_violation(session, std::string("unexpected ") + kind_name(msg.kind));
  }
}

void Router::handle_hello(RouterSession& session, const Message& msg) {
  const auto& realm = msg.uri;
  const bool known =
      std::find(config_.realms.begin(), config_.realms.end(), realm) != config_.realms.end();
  if (!known) {
    session.link_->send_frame(encode(Message::abort(errs::no_such_realm)));
    session.link_->close_link();
    return;
  }
  session.id_ = next_id_locked();
  session.realm_ = realm;
  session.open_ = true;
  sessions_[session.id_] = session.shared_from_this();
  logging::info("router.session_open",
                {{"session", std::to_string(session.id_)}, {"realm", realm}});
  session.link_->send_frame(encode(Message::welcome(session.id_)));
}

void Router::handle_subscribe(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  auto& subs = realm.subscriptions[msg.uri];
  // Re-subscribing to the same topic is idempotent.
  for (const auto& entry : subs) {
    if (entry.session_id == session.id_) {
      send_to(session.id_, Message::subscribed(msg.request_id, entry.subscription_id));
      return;
    }
  }
  const MsgId sub_id = next_id_locked();
  subs.push_back({sub_id, session.id_});
  logging::debug("router.subscribe",
                 {{"session", std::to_string(session.id_)}, {"topic", msg.uri}});
  send_to(session.id_, Message::subscribed(msg.request_id, sub_id));
}

void Router::handle_unsubscribe(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  for (auto& [topic, subs] : realm.subscriptions) {
    auto it = std::find_if(subs.begin(), subs.end(), [&](const SubEntry& e) {
      return e.subscription_id == msg.aux_id && e.session_id == session.id_;
    });
    if (it != subs.end()) {
      subs.erase(it);
      if (subs.empty()) realm.subscriptions.erase(topic);
      send_to(session.id_, Message::unsubscribed(msg.request_id));
      return;
    }
  }
  send_to(session.id_, Message::error(msg.request_id, errs::no_such_subscription));
}

void Router::handle_publish(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  const MsgId publication_id = next_id_locked();
  auto it = realm.subscriptions.find(msg.uri);
  if (it != realm.subscriptions.end()) {
    for (const auto& entry : it->second) {
      if (entry.session_id == session.id_) continue;  // publisher never hears itself
      send_to(entry.session_id,
              Message::event(entry.subscription_id, publication_id, msg.payload));
    }
  }
  logging::debug("router.publish", {{"session", std::to_string(session.id_)},
                                    {"topic", msg.uri},
                                    {"publication", std::to_string(publication_id)}});
  send_to(session.id_, Message::published(msg.request_id, publication_id));
}

void Router::handle_register(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  auto [it, inserted] = realm.registrations.try_emplace(msg.uri);
  if (!inserted) {
    send_to(session.id_, Message::error(msg.request_id, errs::procedure_already_exists));
    return;
  }
  it->second = {next_id_locked(), session.id_};
  logging::debug("router.register",
                 {{"session", std::to_string(session.id_)}, {"procedure", msg.uri}});
  send_to(session.id_, Message::registered(msg.request_id, it->second.registration_id));
}

void Router::handle_unregister(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  for (auto it = realm.registrations.begin(); it != realm.registrations.end(); ++it) {
    if (it->second.registration_id == msg.aux_id && it->second.session_id == session.id_) {
      realm.registrations.erase(it);
      send_to(session.id_, Message::unregistered(msg.request_id));
      return;
    }
  }
  send_to(session.id_, Message::error(msg.request_id, errs::no_such_registration));
}

void Router::handle_call(RouterSession& session, const Message& msg) {
  auto& realm = realm_locked(session.realm_);
  auto it = realm.registrations.find(msg.uri);
  if (it == realm.registrations.end()) {
    send_to(session.id_, Message::error(msg.request_id, errs::no_such_procedure));
    return;
  }
  const MsgId invocation_id = next_id_locked();
  PendingCall pending;
  pending.caller_session = session.id_;
  pending.caller_request = msg.request_id;
  pending.callee_session = it->second.session_id;
  pending.deadline = std::chrono::steady_clock::now() +
                     std::chrono::milliseconds(config_.call_timeout_ms);
  pending_calls_[invocation_id] = pending;
  send_to(it->second.session_id,
          Message::invocation(invocation_id, it->second.registration_id, msg.payload));
}

void Router::handle_yield(RouterSession& session, const Message& msg) {
  auto it = pending_calls_.find(msg.request_id);
  if (it == pending_calls_.end() || it->second.callee_session != session.id_) {
    return;  // timed out or caller gone; drop the late answer
  }
  const PendingCall call = it->second;
  pending_calls_.erase(it);
  send_to(call.caller_session, Message::result(call.caller_request, msg.payload));
}

void Router::handle_callee_error(RouterSession& session, const Message& msg) {
  auto it = pending_calls_.find(msg.request_id);
  if (it == pending_calls_.end() || it->second.callee_session != session.id_) return;
  const PendingCall call = it->second;
  pending_calls_.erase(it);
  send_to(call.caller_session, Message::error(call.caller_request, msg.uri, msg.payload));
}

void Router::handle_goodbye(RouterSession& session, const Message&) {
  session.link_->send_frame(encode(Message::goodbye(errs::goodbye_out)));
  close_session_locked(session);
  session.link_->close_link();
}

void Router::close_session_locked(RouterSession& session) {
  if (!session.open_) return;
  session.open_ = false;
  const MsgId sid = session.id_;
  auto& realm = realm_locked(session.realm_);

  for (auto it = realm.subscriptions.begin(); it != realm.subscriptions.end();) {
    auto& subs = it->second;
    subs.erase(std::remove_if(subs.begin(), subs.end(),
                              [&](const SubEntry& e) { return e.session_id == sid; }),
               subs.end());
    it = subs.empty() ? realm.subscriptions.erase(it) : std::next(it);
  }
  for (auto it = realm.registrations.begin(); it != realm.registrations.end();) {
    it = (it->second.session_id == sid) ? realm.registrations.erase(it) : std::next(it);
  }
  for (auto it = pending_calls_.begin(); it != pending_calls_.end();) {
    if (it->second.callee_session == sid) {
      send_to(it->second.caller_session,
              Message::error(it->second.caller_request, errs::callee_gone));
      it = pending_calls_.erase(it);
    } else if (it->second.caller_session == sid) {
      it = pending_calls_.erase(it);
    } else {
      ++it;
    }
  }
  sessions_.erase(sid);
  logging::info("router.session_close", {{"session", std::to_string(sid)}});
}

void Router::protocol_violation(RouterSession& session, const std::string& what) {
  logging::warn("router.protocol_violation",
                {{"session", std::to_string(session.id_)}, {"what", what}});
  session.link_->send_frame(encode(Message::abort(errs::protocol_violation)));
  close_session_locked(session);
  session.link_->close_link();
}

void Router::reap_expired_calls() {
  std::lock_guard lock(mutex_);
  const auto now = std::chrono::steady_clock::now();
  for (auto it = pending_calls_.begin(); it != pending_calls_.end();) {
    if (it->second.deadline <= now) {
      send_to(it->second.caller_session,
              Message::error(it->second.caller_request, errs::timeout));
      it = pending_calls_.erase(it);
    } else {
      ++it;
    }
  }
}

RouterSession::RouterSession(std::shared_ptr<Router> router, std::shared_ptr<PeerLink> link)
    : router_(std::move(router)), link_(std::move(link)) {}

void RouterSession::deliver(std::string_view frame) {
  Message msg;
  try {
    msg = decode(frame);
  } catch (const InvalidMessage&) {
    std::lock_guard lock(router_->mutex_);
    if (auto req = peek_bad_uri_request(frame); req && open_) {
      router_->send_to(id_, Message::error(req->request_id, errs::invalid_uri));
      return;
    }
    router_->protocol_violation(*this, "invalid message");
    return;
  } catch (const ProtocolError& e) {
    std::lock_guard lock(router_->mutex_);
    router_->protocol_violation(*this, e.what());
    return;
  }
  std::lock_guard lock(router_->mutex_);
  router_->dispatch(*this, msg);
}

void RouterSession::transport_closed() {
  std::lock_guard lock(router_->mutex_);
  router_->close_session_locked(*this);
}

}  // namespace iotmesh
