#ifndef IOTMESH_ROUTER_HPP
#define IOTMESH_ROUTER_HPP

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "iotmesh/config.hpp"
#include "iotmesh/protocol.hpp"
#include "iotmesh/transport.hpp"

namespace iotmesh {

class RouterSession;

// The hub of the star topology: broker (PubSub fan-out) and dealer (RPC
// correlation), realm-scoped. One mutex serializes all table mutations, so
// every publish observes a consistent table snapshot and messages from one
// session apply in arrival order.
class Router : public std::enable_shared_from_this<Router> {
 public:
  static std::shared_ptr<Router> create(RouterConfig config);
  ~Router();

  Router(const Router&) = delete;
  Router& operator=(const Router&) = delete;

  // Attach a transport-level connection. The returned session is in the
  // pre-HELLO state; the transport feeds inbound frames via deliver().
  std::shared_ptr<RouterSession> attach(std::shared_ptr<PeerLink> link);

  // Starts the call-timeout reaper. Safe to call more than once.
  void start();
  void stop();

  const RouterConfig& config() const { return config_; }

  struct TableStats {
    std::size_t sessions = 0;
    std::size_t subscription_rows = 0;
    std::size_t registration_rows = 0;
    std::size_t pending_calls = 0;
  };
  TableStats stats() const;
  // True if any broker/dealer table row still references the session.
  bool session_referenced(MsgId session_id) const;

 private:
  friend class RouterSession;

  struct SubEntry {
    MsgId subscription_id;
    MsgId session_id;
  };
  struct RegEntry {
    MsgId registration_id;
    MsgId session_id;
  };
  struct RealmState {
    // topic -> subscribers in subscription order
    std::map<std::string, std::vector<SubEntry>> subscriptions;
    // procedure -> sole registration
    std::map<std::string, RegEntry> registrations;
  };
  struct PendingCall {
    MsgId caller_session = 0;
    MsgId caller_request = 0;
    MsgId callee_session = 0;
    std::chrono::steady_clock::time_point deadline;
  };

  explicit Router(RouterConfig config);

  // All handlers below run with mutex_ held.
  void handle_hello(RouterSession& session, const Message& msg);
  void handle_subscribe(RouterSession& session, const Message& msg);
  void handle_unsubscribe(RouterSession& session, const Message& msg);
  void handle_publish(RouterSession& session, const Message& msg);
  void handle_register(RouterSession& session, const Message& msg);
  void handle_unregister(RouterSession& session, const Message& msg);
  void handle_call(RouterSession& session, const Message& msg);
  void handle_yield(RouterSession& session, const Message& msg);
  void handle_callee_error(RouterSession& session, const Message& msg);
  void handle_goodbye(RouterSession& session, const Message& msg);
  void close_session_locked(RouterSession& session);

  void dispatch(RouterSession& session, const Message& msg);
  void protocol_violation(RouterSession& session, const std::string& what);
  void send_to(MsgId session_id, const Message& msg);
  MsgId next_id_locked();
  RealmState& realm_locked(const std::string& name);
  void reap_expired_calls();

  RouterConfig config_;
  mutable std::mutex mutex_;
  MsgId next_id_ = 0;
  std::map<MsgId, std::shared_ptr<RouterSession>> sessions_;
  std::map<std::string, RealmState> realms_;
  std::map<MsgId, PendingCall> pending_calls_;  // keyed by invocation id

  std::mutex reaper_mutex_;
  std::condition_variable reaper_cv_;
  std::thread reaper_;
  bool reaper_running_ = false;
  bool stopping_ = false;
};

// One attached peer, pre- or post-HELLO. Owned by its transport.
class RouterSession : public std::enable_shared_from_this<RouterSession> {
 public:
  RouterSession(std::shared_ptr<Router> router, std::shared_ptr<PeerLink> link);

  // Decode one inbound frame and route it. Replies and fan-out go out
  // through the peers' links before this returns (some linearization point).
  void deliver(std::string_view frame);

  // Transport dropped: cleans tables, answers outstanding calls with
  // err.callee_gone.
  void transport_closed();

  MsgId id() const { return id_; }
  const std::string& realm() const { return realm_; }
  bool open() const { return open_; }

 private:
  friend class Router;

  std::shared_ptr<Router> router_;
  std::shared_ptr<PeerLink> link_;
  // Guarded by the router mutex.
  MsgId id_ = 0;
  std::string realm_;
  bool open_ = false;
};

}  // namespace iotmesh

#endif
