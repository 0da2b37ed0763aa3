#include <doctest.h>

#include <atomic>
#include <future>

#include "iotmesh/client.hpp"
#include "iotmesh/router.hpp"
#include "iotmesh/tcp.hpp"

using namespace iotmesh;

namespace {

RouterConfig clinic_config() {
  RouterConfig config;
  config.realms = {"clinic"};
  return config;
}

}  // namespace

TEST_SUITE("client") {

TEST_CASE("connect handshake") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  CHECK(conn->session_id() > 0);
  CHECK(conn->connected());
  conn->close();
  CHECK_FALSE(conn->connected());
}

TEST_CASE("connect failures") {
  auto router = Router::create(clinic_config());
  CHECK_THROWS_AS(PeerConnection::connect_local(router, "ghost"), RealmRejected);
  // Nothing listens on this port.
  CHECK_THROWS_AS(PeerConnection::connect_tcp("127.0.0.1", 1, "clinic"), ConnectFailed);
}

TEST_CASE("register then self-call") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  conn->register_procedure("svc.twice", [](const Payload& args) {
    return Payload{{"doubled", args.value("x", 0) * 2}};
  });
  CHECK(conn->call("svc.twice", {{"x", 21}}) == Payload{{"doubled", 42}});
  CHECK(conn->pending_requests() == 0);
  conn->close();
}

TEST_CASE("handler exceptions surface to the caller") {
  auto router = Router::create(clinic_config());
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");
  callee->register_procedure("svc.boom", [](const Payload&) -> Payload {
    throw std::runtime_error("kaput");
  });
  callee->register_procedure("svc.typed", [](const Payload&) -> Payload {
    throw CallError(errs::no_utterance, {{"hint", "queue empty"}});
  });

  try {
    caller->call("svc.boom");
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::handler_failed);
    CHECK(e.payload().value("what", "") == "kaput");
  }
  try {
    caller->call("svc.typed");
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::no_utterance);
    CHECK(e.payload().value("hint", "") == "queue empty");
  }
  callee->close();
  caller->close();
}

TEST_CASE("double register raises procedure_already_exists") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  conn->register_procedure("svc.one", [](const Payload& p) { return p; });
  CHECK_THROWS_AS(conn->register_procedure("svc.one", [](const Payload& p) { return p; }),
                  CallError);
  conn->close();
}

TEST_CASE("client-side uri validation") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  CHECK_THROWS_AS(conn->subscribe("BAD..uri", [](const std::string&, const Payload&) {}),
                  CallError);
  CHECK_THROWS_AS(conn->publish("BAD..uri", {}), CallError);
  CHECK_THROWS_AS(conn->call("BAD..uri"), CallError);
  conn->close();
}

TEST_CASE("subscribe delivers once per publish, in order") {
  auto router = Router::create(clinic_config());
  auto sub = PeerConnection::connect_local(router, "clinic");
  auto pub = PeerConnection::connect_local(router, "clinic");

  std::vector<int> order;
  std::mutex order_mutex;
  sub->subscribe("seq.topic", [&](const std::string&, const Payload& payload) {
    std::lock_guard lock(order_mutex);
    order.push_back(payload.value("n", -1));
  });
  for (int i = 0; i < 20; ++i) pub->publish("seq.topic", {{"n", i}});
  sub->publish("fence.topic", {});
  {
    std::lock_guard lock(order_mutex);
    REQUIRE(order.size() == 20);
    for (int i = 0; i < 20; ++i) CHECK(order[static_cast<std::size_t>(i)] == i);
  }

  SUBCASE("after unsubscribe, zero fires") {
    const std::size_t before = order.size();
    // Only one subscription exists per (topic, session); find and drop it.
    const MsgId sub_id = sub->subscribe("seq.topic", [](const std::string&, const Payload&) {});
    sub->unsubscribe(sub_id);
    pub->publish("seq.topic", {{"n", 99}});
    sub->publish("fence.topic", {});
    std::lock_guard lock(order_mutex);
    CHECK(order.size() == before);
  }
  sub->close();
  pub->close();
}

TEST_CASE("call_async completion carries the outcome") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  conn->register_procedure("svc.echo", [](const Payload& p) { return p; });

  std::promise<PeerConnection::CallOutcome> done;
  conn->call_async("svc.echo", {{"v", 7}},
                   [&](PeerConnection::CallOutcome outcome) { done.set_value(std::move(outcome)); });
  const auto ok = done.get_future().get();
  CHECK(ok.ok);
  CHECK(ok.value == Payload{{"v", 7}});

  std::promise<PeerConnection::CallOutcome> failed;
  conn->call_async("no.such", {}, [&](PeerConnection::CallOutcome outcome) {
    failed.set_value(std::move(outcome));
  });
  const auto err = failed.get_future().get();
  CHECK_FALSE(err.ok);
  CHECK(err.error == errs::no_such_procedure);
  conn->close();
}

TEST_CASE("pending map drains after bursts of mixed requests") {
  auto router = Router::create(clinic_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  conn->register_procedure("svc.echo", [](const Payload& p) { return p; });
  for (int round = 0; round < 5; ++round) {
    std::vector<std::future<Payload>> calls;
    for (int i = 0; i < 8; ++i) {
      calls.push_back(std::async(std::launch::async,
                                 [&conn, i] { return conn->call("svc.echo", {{"i", i}}); }));
    }
    for (auto& f : calls) (void)f.get();
    conn->publish("a.topic", {});
    const MsgId sub = conn->subscribe("a.topic", [](const std::string&, const Payload&) {});
    conn->unsubscribe(sub);
  }
  CHECK(conn->pending_requests() == 0);
  conn->close();
}

TEST_CASE("tcp transport parity") {
  auto router = Router::create(clinic_config());
  TcpServer server(router, {"127.0.0.1", 0});
  server.start();

  auto callee = PeerConnection::connect_tcp("127.0.0.1", server.port(), "clinic");
  auto caller = PeerConnection::connect_tcp("127.0.0.1", server.port(), "clinic");
  callee->register_procedure("svc.echo", [](const Payload& p) { return p; });

  CHECK(caller->call("svc.echo", {{"x", "over tcp"}}) == Payload{{"x", "over tcp"}});

  std::atomic<int> events{0};
  caller->subscribe("tcp.topic", [&](const std::string&, const Payload&) { events++; });
  callee->publish("tcp.topic", {{"hello", true}});
  caller->publish("fence.topic", {});
  CHECK(events.load() == 1);

  CHECK_THROWS_AS(PeerConnection::connect_tcp("127.0.0.1", server.port(), "ghost"),
                  RealmRejected);

  caller->close();
  callee->close();
  server.stop();
}

}  // TEST_SUITE
