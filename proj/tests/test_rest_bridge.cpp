#include <doctest.h>

#include <httplib.h>

#include <future>

#include "iotmesh/rest_bridge.hpp"
#include "iotmesh/scenario.hpp"

using namespace iotmesh;

namespace {

// Full stack plus a bridge bound to an ephemeral port.
struct BridgedStack {
  app::ScenarioRunner runner;
  RestBridge bridge;
  httplib::Client http;

  BridgedStack()
      : bridge(runner.router(), "clinic", Endpoint{"127.0.0.1", 0}),
        http("127.0.0.1", [this] {
          bridge.start();
          return bridge.port();
        }()) {
    http.set_read_timeout(10, 0);
  }

  ~BridgedStack() { bridge.stop(); }
};

}  // namespace

TEST_SUITE("rest_bridge") {

TEST_CASE("path to uri mapping") {
  CHECK(RestBridge::path_to_uri("/nao/speak") == "nao.speak");
  CHECK(RestBridge::path_to_uri("remedes/exercise/start") == "remedes.exercise.start");
  CHECK(RestBridge::path_to_uri("/") == "");
}

TEST_CASE("status mapping is total") {
  CHECK(RestBridge::status_for_error(errs::no_such_procedure) == 404);
  CHECK(RestBridge::status_for_error(errs::timeout) == 504);
  CHECK(RestBridge::status_for_error(errs::callee_gone) == 502);
  CHECK(RestBridge::status_for_error(errs::invalid_uri) == 422);
  CHECK(RestBridge::status_for_error(errs::bad_payload) == 400);
  CHECK(RestBridge::status_for_error(errs::no_utterance) == 500);
  CHECK(RestBridge::status_for_error("err.something_new") == 500);
}

TEST_CASE("bridge call round trips") {
  BridgedStack stack;

  SUBCASE("POST /call/rpi/reminder returns the extraction list") {
    const Json body{{"text", "Remind me to take the medicine every day after lunch"},
                    {"now", "2017-10-18T10:00"}};
    auto res = stack.http.Post("/call/rpi/reminder", body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const Json parsed = Json::parse(res->body);
    REQUIRE(parsed["extractions"].size() == 1);
    CHECK(parsed["extractions"][0]["body"] == "take the medicine");

    // Bridge equivalence: byte-identical to the native call payload.
    auto native = PeerConnection::connect_local(stack.runner.router(), "clinic");
    const Payload native_result = native->call("rpi.reminder", body);
    CHECK(res->body == canonical_dump(native_result));
    native->close();
  }

  SUBCASE("GET /call/nao/record pops the queued utterance") {
    stack.runner.robot().enqueue_utterance("hello bridge");
    auto res = stack.http.Get("/call/nao/record");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Json::parse(res->body)["transcript"] == "hello bridge");
  }

  SUBCASE("GET with query parameters becomes the payload") {
    stack.runner.robot().enqueue_utterance("typed");
    auto res = stack.http.Get("/call/nao/record?duration_s=3.5");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Json::parse(res->body)["duration_s"] == 3.5);
  }

  SUBCASE("unknown procedure is 404") {
    auto res = stack.http.Post("/call/no/such", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(Json::parse(res->body)["error"] == errs::no_such_procedure);
  }

  SUBCASE("routed service errors surface as 5xx with the reason") {
    auto res = stack.http.Get("/call/nao/record");  // nothing queued
    REQUIRE(res);
    CHECK(res->status == 500);
    CHECK(Json::parse(res->body)["error"] == errs::no_utterance);
  }

  SUBCASE("malformed body is 400") {
    auto res = stack.http.Post("/call/rpi/reminder", "not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    auto list_body = stack.http.Post("/call/rpi/reminder", "[1,2]", "application/json");
    REQUIRE(list_body);
    CHECK(list_body->status == 400);
  }

  SUBCASE("uppercase path maps to an invalid uri") {
    auto res = stack.http.Post("/call/NAO/speak", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
  }

  SUBCASE("a callee that disconnects mid-call maps to 502") {
    auto doomed = PeerConnection::connect_local(stack.runner.router(), "clinic");
    std::promise<void> entered;
    std::promise<void> release;
    auto released = release.get_future().share();
    doomed->register_procedure("flaky.service", [&entered, released](const Payload& args) {
      entered.set_value();
      released.wait();
      return args;
    });
    auto pending = std::async(std::launch::async, [&] {
      return stack.http.Post("/call/flaky/service", "{}", "application/json");
    });
    entered.get_future().wait();
    doomed->close();
    auto res = pending.get();
    REQUIRE(res);
    CHECK(res->status == 502);
    CHECK(Json::parse(res->body)["error"] == errs::callee_gone);
    release.set_value();
  }
}

TEST_CASE("bridge publish") {
  BridgedStack stack;

  SUBCASE("events reach subscribers and the bridge acks with 202") {
    stack.runner.subscribe_probe("remedes.results");
    auto res = stack.http.Post("/publish/remedes/results", R"({"mean_ms":412})",
                               "application/json");
    REQUIRE(res);
    CHECK(res->status == 202);
    CHECK(Json::parse(res->body) == Json{{"published", true}});
    stack.runner.settle();
    const auto events = stack.runner.events("remedes.results");
    REQUIRE(events.size() == 1);
    CHECK(events[0]["mean_ms"] == 412);
  }

  SUBCASE("empty topic path is 422") {
    auto res = stack.http.Post("/publish/", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
  }

  SUBCASE("non-map body is 400") {
    auto res = stack.http.Post("/publish/remedes/results", "[1]", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
  }
}

TEST_CASE("openapi document") {
  BridgedStack stack;
  auto res = stack.http.Get("/openapi");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "application/json");
  const Json doc = Json::parse(res->body);

  CHECK(doc["openapi"] == "3.0.3");
  CHECK(doc["info"].contains("title"));
  CHECK(doc["info"].contains("version"));
  REQUIRE(doc["paths"].is_object());
  CHECK(doc["paths"].contains("/call/rpi/reminder"));
  CHECK(doc["paths"].contains("/call/nao/record"));
  CHECK(doc["paths"].contains("/call/remedes/exercise/start"));
  CHECK(doc["paths"].contains("/publish/remedes/results"));
  CHECK(doc["paths"]["/call/nao/record"].contains("get"));
  CHECK(doc["paths"]["/call/rpi/reminder"].contains("post"));

  // Every operation has an operationId and at least one response.
  for (const auto& [path, item] : doc["paths"].items()) {
    for (const auto& [method, operation] : item.items()) {
      CAPTURE(path);
      CAPTURE(method);
      CHECK((method == "get" || method == "post"));
      CHECK(operation.contains("operationId"));
      REQUIRE(operation.contains("responses"));
      CHECK_FALSE(operation["responses"].empty());
    }
  }

  SUBCASE("a route added to the table appears in the document") {
    stack.bridge.add_route({"post", "/call/lab/analyze", BridgeRoute::Interaction::Call,
                            "lab.analyze", "Run an analysis"});
    auto updated = stack.http.Get("/openapi");
    REQUIRE(updated);
    CHECK(Json::parse(updated->body)["paths"].contains("/call/lab/analyze"));
  }
}

}  // TEST_SUITE
