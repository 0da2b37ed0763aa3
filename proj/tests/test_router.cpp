#include <doctest.h>

#include <atomic>
#include <future>
#include <thread>

#include "iotmesh/client.hpp"
#include "iotmesh/router.hpp"
#include "support/capture_link.hpp"

using namespace iotmesh;

namespace {

RouterConfig test_config(int timeout_ms = 30000) {
  RouterConfig config;
  config.realms = {"clinic", "lab"};
  config.call_timeout_ms = timeout_ms;
  return config;
}

}  // namespace

TEST_SUITE("router") {

TEST_CASE("sessions get distinct ids and realm gating") {
  auto router = Router::create(test_config());
  auto a = PeerConnection::connect_local(router, "clinic");
  auto b = PeerConnection::connect_local(router, "clinic");
  CHECK(a->session_id() > 0);
  CHECK(b->session_id() > 0);
  CHECK(a->session_id() != b->session_id());
  CHECK_THROWS_AS(PeerConnection::connect_local(router, "ghost"), RealmRejected);
  a->close();
  b->close();
}

TEST_CASE("subscribe is idempotent per (topic, session)") {
  auto router = Router::create(test_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  const MsgId first = conn->subscribe("remedes.results", [](const std::string&, const Payload&) {});
  const MsgId second = conn->subscribe("remedes.results", [](const std::string&, const Payload&) {});
  CHECK(first == second);
  CHECK(router->stats().subscription_rows == 1);
  conn->close();
}

TEST_CASE("publish fans out exactly once per subscriber, excluding the publisher") {
  auto router = Router::create(test_config());
  auto publisher = PeerConnection::connect_local(router, "clinic");
  std::atomic<int> publisher_events{0};
  publisher->subscribe("remedes.results",
                       [&](const std::string&, const Payload&) { publisher_events++; });

  std::vector<std::shared_ptr<PeerConnection>> doctors;
  std::atomic<int> deliveries{0};
  Payload seen;
  std::mutex seen_mutex;
  for (int i = 0; i < 3; ++i) {
    auto doctor = PeerConnection::connect_local(router, "clinic");
    doctor->subscribe("remedes.results", [&](const std::string& topic, const Payload& payload) {
      CHECK(topic == "remedes.results");
      std::lock_guard lock(seen_mutex);
      seen = payload;
      deliveries++;
    });
    doctors.push_back(doctor);
  }

  publisher->publish("remedes.results", {{"mean_ms", 412}});
  // Ack-fencing: each doctor's own publish ack queues behind the EVENT.
  for (auto& doctor : doctors) doctor->publish("fence.topic", {});
  CHECK(deliveries.load() == 3);
  CHECK(publisher_events.load() == 0);
  {
    std::lock_guard lock(seen_mutex);
    CHECK(seen == Payload{{"mean_ms", 412}});
  }

  SUBCASE("zero subscribers still acks") {
    CHECK_NOTHROW(publisher->publish("empty.topic", {{"x", 1}}));
  }

  SUBCASE("unsubscribed sessions stop receiving") {
    const int before = deliveries.load();
    auto conn = doctors[0];
    const MsgId sub = conn->subscribe("remedes.results", [](const std::string&, const Payload&) {});
    conn->unsubscribe(sub);
    publisher->publish("remedes.results", {{"mean_ms", 1}});
    for (auto& doctor : doctors) doctor->publish("fence.topic", {});
    CHECK(deliveries.load() == before + 2);  // doctors[1] and doctors[2]
  }

  for (auto& doctor : doctors) doctor->close();
  publisher->close();
}

TEST_CASE("routing is realm-scoped") {
  auto router = Router::create(test_config());
  auto clinic_sub = PeerConnection::connect_local(router, "clinic");
  auto lab_pub = PeerConnection::connect_local(router, "lab");
  std::atomic<int> events{0};
  clinic_sub->subscribe("shared.topic", [&](const std::string&, const Payload&) { events++; });
  lab_pub->publish("shared.topic", {{"from", "lab"}});
  clinic_sub->publish("fence.topic", {});
  CHECK(events.load() == 0);
  clinic_sub->close();
  lab_pub->close();
}

TEST_CASE("single registration per procedure, first wins") {
  auto router = Router::create(test_config());
  auto first = PeerConnection::connect_local(router, "clinic");
  auto second = PeerConnection::connect_local(router, "clinic");
  first->register_procedure("nao.speak", [](const Payload& p) { return p; });
  try {
    second->register_procedure("nao.speak", [](const Payload& p) { return p; });
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::procedure_already_exists);
  }
  first->close();
  second->close();
}

TEST_CASE("unregister") {
  auto router = Router::create(test_config());
  auto owner = PeerConnection::connect_local(router, "clinic");
  auto other = PeerConnection::connect_local(router, "clinic");
  const MsgId reg = owner->register_procedure("nao.speak", [](const Payload& p) { return p; });

  SUBCASE("own registration") {
    owner->unregister(reg);
    CHECK(router->stats().registration_rows == 0);
  }
  SUBCASE("foreign registration id") {
    try {
      other->unregister(reg);
      FAIL("expected CallError");
    } catch (const CallError& e) {
      CHECK(e.reason() == errs::no_such_registration);
    }
  }
  owner->close();
  other->close();
}

TEST_CASE("call reaches the callee and the result returns") {
  auto router = Router::create(test_config());
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");
  callee->register_procedure("svc.echo", [](const Payload& args) { return args; });

  CHECK(caller->call("svc.echo", {{"x", 1}}) == Payload{{"x", 1}});

  SUBCASE("unknown procedure") {
    try {
      caller->call("no.such");
      FAIL("expected CallError");
    } catch (const CallError& e) {
      CHECK(e.reason() == errs::no_such_procedure);
    }
  }
  callee->close();
  caller->close();
}

TEST_CASE("interleaved calls correlate independently") {
  auto router = Router::create(test_config());
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");
  callee->register_procedure("svc.echo", [](const Payload& args) { return args; });

  std::vector<std::future<Payload>> futures;
  for (int i = 0; i < 10; ++i) {
    futures.push_back(std::async(std::launch::async, [&caller, i] {
      return caller->call("svc.echo", {{"tag", i}});
    }));
  }
  for (int i = 0; i < 10; ++i) {
    CHECK(futures[static_cast<std::size_t>(i)].get() == Payload{{"tag", i}});
  }
  callee->close();
  caller->close();
}

TEST_CASE("callee disconnect answers outstanding calls with err.callee_gone") {
  auto router = Router::create(test_config());
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");

  std::promise<void> handler_entered;
  std::promise<void> release;
  auto released = release.get_future().share();
  callee->register_procedure("svc.slow", [&, released](const Payload& args) {
    handler_entered.set_value();
    released.wait();
    return args;
  });

  auto pending = std::async(std::launch::async, [&] { return caller->call("svc.slow"); });
  handler_entered.get_future().wait();
  callee->close();
  try {
    pending.get();
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::callee_gone);
  }
  release.set_value();
  caller->close();
}

TEST_CASE("router timeout answers with err.timeout") {
  auto router = Router::create(test_config(50));
  router->start();
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");

  std::promise<void> release;
  auto released = release.get_future().share();
  callee->register_procedure("svc.sleepy", [released](const Payload& args) {
    released.wait();
    return args;
  });
  try {
    caller->call("svc.sleepy");
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::timeout);
  }
  release.set_value();
  callee->close();
  caller->close();
  router->stop();
}

TEST_CASE("close_session scrubs every table") {
  auto router = Router::create(test_config());
  auto conn = PeerConnection::connect_local(router, "clinic");
  auto observer = PeerConnection::connect_local(router, "clinic");
  const MsgId sid = conn->session_id();
  conn->subscribe("remedes.results", [](const std::string&, const Payload&) {});
  conn->subscribe("other.topic", [](const std::string&, const Payload&) {});
  conn->register_procedure("nao.speak", [](const Payload& p) { return p; });
  CHECK(router->session_referenced(sid));

  conn->close();

  CHECK_FALSE(router->session_referenced(sid));
  CHECK(router->stats().sessions == 1);
  try {
    observer->call("nao.speak", {{"text", "hello"}});
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::no_such_procedure);
  }

  SUBCASE("publish fans out to the remaining subscribers only") {
    std::atomic<int> events{0};
    auto survivor = PeerConnection::connect_local(router, "clinic");
    survivor->subscribe("remedes.results", [&](const std::string&, const Payload&) { events++; });
    observer->publish("remedes.results", {{"mean_ms", 3}});
    survivor->publish("fence.topic", {});
    CHECK(events.load() == 1);
    survivor->close();
  }

  SUBCASE("closing an idle session leaves tables unchanged") {
    auto idle = PeerConnection::connect_local(router, "clinic");
    const auto before = router->stats();
    idle->close();
    const auto after = router->stats();
    CHECK(after.subscription_rows == before.subscription_rows);
    CHECK(after.registration_rows == before.registration_rows);
  }
  observer->close();
}

TEST_CASE("raw frame with a bad uri gets ERROR err.invalid_uri") {
  auto router = Router::create(test_config());
  auto link = std::make_shared<testsupport::CaptureLink>();
  auto session = router->attach(link);
  session->deliver(encode(Message::hello("clinic")));
  REQUIRE(link->wait_for_messages(1));
  REQUIRE(link->messages()[0].kind == MessageKind::Welcome);

  SUBCASE("subscribe") {
    session->deliver("[32,5,{},\"BAD..uri\"]");
    REQUIRE(link->wait_for_messages(2));
    const Message error = link->messages()[1];
    CHECK(error.kind == MessageKind::Error);
    CHECK(error.request_id == 5);
    CHECK(error.uri == errs::invalid_uri);
  }
  SUBCASE("publish") {
    session->deliver("[16,6,{},\"\",{}]");
    REQUIRE(link->wait_for_messages(2));
    CHECK(link->messages()[1].uri == errs::invalid_uri);
  }
  SUBCASE("garbage aborts the session") {
    session->deliver("this is not a frame");
    REQUIRE(link->wait_for_messages(2));
    CHECK(link->messages()[1].kind == MessageKind::Abort);
    CHECK(link->closed());
  }
  session->transport_closed();
}

TEST_CASE("hello against an unknown realm aborts with err.no_such_realm") {
  auto router = Router::create(test_config());
  auto link = std::make_shared<testsupport::CaptureLink>();
  auto session = router->attach(link);
  session->deliver(encode(Message::hello("ghost")));
  REQUIRE(link->wait_for_messages(1));
  CHECK(link->messages()[0].kind == MessageKind::Abort);
  CHECK(link->messages()[0].uri == errs::no_such_realm);
  CHECK(link->closed());
}

}  // TEST_SUITE
