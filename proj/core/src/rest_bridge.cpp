#include "iotmesh/rest_bridge.hpp"

#include <httplib.h>

#include <sstream>

#include "iotmesh/logging.hpp"

namespace iotmesh {

namespace {

// Query parameter values arrive as strings; scalar JSON literals ("3", "true")
// are promoted so GET payloads can round-trip numbers and booleans.
Json query_value(const std::string& raw) {
  Json parsed = Json::parse(raw, nullptr, false);
  if (!parsed.is_discarded() && (parsed.is_number() || parsed.is_boolean() || parsed.is_null())) {
    return parsed;
  }
  return raw;
}

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

void reply_error(httplib::Response& res, const std::string& reason, const Payload& details) {
  reply_json(res, RestBridge::status_for_error(reason),
             Json{{"error", reason}, {"details", details}});
}

std::string operation_id(const BridgeRoute& route) {
  std::string id = route.method;
  for (char c : route.path) id += (c == '/') ? '_' : c;
  return id;
}

}  // namespace

std::vector<BridgeRoute> default_bridge_routes() {
  using I = BridgeRoute::Interaction;
  return {
      {"post", "/call/nao/speak", I::Call, "nao.speak", "Invoke speech synthesis on the robot"},
      {"get", "/call/nao/record", I::Call, "nao.record", "Record an utterance from the robot microphone"},
      {"post", "/call/rpi/speech_recognition", I::Call, "rpi.speech_recognition",
       "Transcribe an audio payload"},
      {"post", "/call/rpi/reminder", I::Call, "rpi.reminder",
       "Extract reminder records from text"},
      {"post", "/call/remedes/exercise/start", I::Call, "remedes.exercise.start",
       "Start a reflex exercise"},
      {"get", "/call/remedes/exercise/results", I::Call, "remedes.exercise.results",
       "Fetch reflex exercise results"},
      {"post", "/publish/remedes/results", I::Publish, "remedes.results",
       "Publish exercise results to subscribers"},
  };
}

RestBridge::RestBridge(std::shared_ptr<Router> router, std::string realm, Endpoint listen)
    : router_(std::move(router)), realm_(std::move(realm)), listen_(std::move(listen)),
      server_(std::make_unique<httplib::Server>()) {
  routes_ = default_bridge_routes();
  rebuild_document_locked();
}

RestBridge::~RestBridge() { stop(); }

std::string RestBridge::path_to_uri(const std::string& path) {
  std::string uri;
  for (char c : path) uri += (c == '/') ? '.' : c;
  while (!uri.empty() && uri.front() == '.') uri.erase(uri.begin());
  while (!uri.empty() && uri.back() == '.') uri.pop_back();
  return uri;
}

int RestBridge::status_for_error(const std::string& reason) {
  if (reason == errs::no_such_procedure) return 404;
  if (reason == errs::timeout) return 504;
  if (reason == errs::callee_gone) return 502;
  if (reason == errs::invalid_uri) return 422;
  if (reason == errs::bad_payload) return 400;
  return 500;
}

void RestBridge::start() {
  session_ = PeerConnection::connect_local(router_, realm_);
  install_handlers();
  if (listen_.port == 0) {
    const int bound = server_->bind_to_any_port(listen_.host);
    if (bound < 0) throw std::runtime_error("bridge cannot bind on " + listen_.host);
    port_ = static_cast<std::uint16_t>(bound);
  } else {
    if (!server_->bind_to_port(listen_.host, listen_.port)) {
      throw std::runtime_error("bridge cannot bind on " + listen_.host + ":" +
                               std::to_string(listen_.port));
    }
    port_ = listen_.port;
  }
  serve_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  logging::info("bridge.listening", {{"host", listen_.host}, {"port", std::to_string(port_)}});
}

void RestBridge::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (serve_thread_.joinable()) serve_thread_.join();
  if (session_) session_->close();
}

void RestBridge::add_route(BridgeRoute route) {
  std::lock_guard lock(mutex_);
  routes_.push_back(std::move(route));
  rebuild_document_locked();
}

std::vector<BridgeRoute> RestBridge::routes() const {
  std::lock_guard lock(mutex_);
  return routes_;
}

Json RestBridge::openapi_document() const {
  std::lock_guard lock(mutex_);
  return document_;
}

void RestBridge::install_handlers() {
  auto handle_call = [this](const httplib::Request& req, httplib::Response& res) {
    Payload payload = Json::object();
    if (req.method == "POST") {
      if (!req.body.empty()) {
        Json parsed = Json::parse(req.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
          reply_json(res, 400, Json{{"error", "err.bad_request"},
                                    {"details", {{"what", "body must be a json map"}}}});
          return;
        }
        payload = std::move(parsed);
      }
    } else {
      for (const auto& [key, value] : req.params) payload[key] = query_value(value);
    }
    const std::string procedure = path_to_uri(req.matches[1].str());
    try {
      const Payload result = session_->call(procedure, std::move(payload));
      reply_json(res, 200, result);
    } catch (const CallError& e) {
      reply_error(res, e.reason(), e.payload());
    } catch (const std::exception& e) {
      reply_json(res, 503, Json{{"error", "err.bridge_unavailable"},
                                {"details", {{"what", e.what()}}}});
    }
  };
  server_->Post(R"(/call/(.+))", handle_call);
  server_->Get(R"(/call/(.+))", handle_call);

  server_->Post(R"(/publish/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string topic = path_to_uri(req.matches[1].str());
    if (!validate_uri(topic)) {
      reply_json(res, 422, Json{{"error", errs::invalid_uri}, {"details", {{"topic", topic}}}});
      return;
    }
    Payload payload = Json::object();
    if (!req.body.empty()) {
      Json parsed = Json::parse(req.body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        reply_json(res, 400, Json{{"error", "err.bad_request"},
                                  {"details", {{"what", "body must be a json map"}}}});
        return;
      }
      payload = std::move(parsed);
    }
    try {
      session_->publish(topic, std::move(payload));
      reply_json(res, 202, Json{{"published", true}});
    } catch (const CallError& e) {
      reply_error(res, e.reason(), e.payload());
    } catch (const std::exception& e) {
      reply_json(res, 503, Json{{"error", "err.bridge_unavailable"},
                                {"details", {{"what", e.what()}}}});
    }
  });

  server_->Get("/openapi", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(openapi_document().dump(2), "application/json");
  });
}

void RestBridge::rebuild_document_locked() {
  Json paths = Json::object();
  for (const auto& route : routes_) {
    Json operation{
        {"operationId", operation_id(route)},
        {"summary", route.summary.empty() ? route.target_uri : route.summary},
        {"responses",
         Json{{"200", Json{{"description", "call result payload"},
                           {"content", Json{{"application/json",
                                             Json{{"schema", Json{{"type", "object"}}}}}}}}},
              {"400", Json{{"description", "malformed request body"}}},
              {"404", Json{{"description", "no such procedure"}}},
              {"422", Json{{"description", "invalid uri"}}},
              {"500", Json{{"description", "routed error"}}},
              {"502", Json{{"description", "callee disconnected"}}},
              {"504", Json{{"description", "call timed out"}}}}},
    };
    if (route.interaction == BridgeRoute::Interaction::Publish) {
      operation["responses"] =
          Json{{"202", Json{{"description", "event accepted for fan-out"},
                            {"content", Json{{"application/json",
                                              Json{{"schema", Json{{"type", "object"}}}}}}}}},
               {"400", Json{{"description", "malformed request body"}}},
               {"422", Json{{"description", "invalid topic uri"}}}};
    }
    if (route.method == "post") {
      operation["requestBody"] =
          Json{{"required", false},
               {"content", Json{{"application/json",
                                 Json{{"schema", Json{{"type", "object"},
                                                      {"additionalProperties", true}}}}}}}};
    } else {
      operation["description"] = "query parameters become payload fields";
    }
    paths[route.path][route.method] = std::move(operation);
  }
  paths["/openapi"]["get"] =
      Json{{"operationId", "get_openapi"},
           {"summary", "this document"},
           {"responses", Json{{"200", Json{{"description", "api description"}}}}}};

  document_ = Json{
      {"openapi", "3.0.3"},
      {"info", Json{{"title", "iotmesh rest bridge"},
                    {"description", "HTTP facade over the message router"},
                    {"version", "0.1.0"}}},
      {"paths", std::move(paths)},
  };
}

}  // namespace iotmesh
