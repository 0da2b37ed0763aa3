#include "iotmesh/scenario.hpp"

#include <cstdio>
#include <random>

#include "iotmesh/errors.hpp"
#include "iotmesh/logging.hpp"
#include "yaml_util.hpp"

namespace iotmesh::app {

namespace {

std::filesystem::path fresh_temp_store() {
  std::mt19937_64 rng{std::random_device{}()};
  return std::filesystem::temp_directory_path() /
         ("iotmesh-scenario-" + std::to_string(rng()) + ".log");
}

DateTime parse_step_datetime(const Json& value, const char* what) {
  if (!value.is_string()) throw ConfigInvalid(std::string(what) + " must be an ISO8601 string");
  auto parsed = DateTime::from_iso(value.get<std::string>());
  if (!parsed) throw ConfigInvalid(std::string("cannot parse ") + what + " as ISO8601");
  return *parsed;
}

}  // namespace

std::string ScenarioStep::describe() const {
  switch (kind) {
    case Kind::EnqueueUtterance:
      return "enqueue_utterance \"" + text + "\"";
    case Kind::AdvanceClock:
      if (advance_to) return "advance_clock to " + advance_to->iso();
      return "advance_clock by " + std::to_string(advance_minutes.value_or(0)) + "m";
    case Kind::ExpectSpeech:
      return "expect_speech \"" + text + "\"";
    case Kind::ExpectEvent:
      return "expect_event " + topic + " " + key + "=" + canonical_dump(value);
    case Kind::ExpectStoreCount:
      return "expect_store_count " + std::to_string(count);
  }
  return "?";
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw ConfigNotFound("scenario file not found: " + path.string());
  }
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigParse("cannot parse " + path.string() + ": " + e.what());
  }
  if (root.IsNull()) return {};
  if (!root.IsSequence()) throw ConfigInvalid("scenario root must be a list of steps");

  Scenario scenario;
  for (const auto& node : root) {
    const Json step_json = yaml_to_json(node);
    if (!step_json.is_object() || step_json.size() != 1) {
      throw ConfigInvalid("each step must be a single-key map");
    }
    const std::string name = step_json.begin().key();
    const Json& args = step_json.begin().value();
    ScenarioStep step;
    if (name == "enqueue_utterance") {
      step.kind = ScenarioStep::Kind::EnqueueUtterance;
      if (!args.is_string()) throw ConfigInvalid("enqueue_utterance takes a string");
      step.text = args.get<std::string>();
    } else if (name == "advance_clock") {
      step.kind = ScenarioStep::Kind::AdvanceClock;
      if (!args.is_object()) throw ConfigInvalid("advance_clock takes a map");
      std::int64_t minutes = 0;
      bool has_duration = false;
      for (const auto& [key, value] : args.items()) {
        if (key == "to") {
          step.advance_to = parse_step_datetime(value, "advance_clock.to");
        } else if (key == "minutes" || key == "hours" || key == "days") {
          if (!value.is_number_integer() && !value.is_number_unsigned()) {
            throw ConfigInvalid("advance_clock." + key + " must be an integer");
          }
          const std::int64_t n = value.get<std::int64_t>();
          minutes += key == "minutes" ? n : key == "hours" ? n * 60 : n * 24 * 60;
          has_duration = true;
        } else {
          throw ConfigInvalid("unknown key `advance_clock." + key + "`");
        }
      }
      if (step.advance_to && has_duration) {
        throw ConfigInvalid("advance_clock takes either `to` or a duration, not both");
      }
      if (!step.advance_to && !has_duration) {
        throw ConfigInvalid("advance_clock needs `to` or a duration");
      }
      if (has_duration) step.advance_minutes = minutes;
    } else if (name == "expect_speech") {
      step.kind = ScenarioStep::Kind::ExpectSpeech;
      if (!args.is_string()) throw ConfigInvalid("expect_speech takes a string");
      step.text = args.get<std::string>();
    } else if (name == "expect_event") {
      step.kind = ScenarioStep::Kind::ExpectEvent;
      if (!args.is_object() || !args.contains("topic") || !args.contains("key") ||
          !args.contains("value")) {
        throw ConfigInvalid("expect_event needs topic, key and value");
      }
      step.topic = args["topic"].get<std::string>();
      step.key = args["key"].get<std::string>();
      step.value = args["value"];
    } else if (name == "expect_store_count") {
      step.kind = ScenarioStep::Kind::ExpectStoreCount;
      if (!args.is_number_unsigned() && !args.is_number_integer()) {
        throw ConfigInvalid("expect_store_count takes an integer");
      }
      step.count = args.get<std::size_t>();
    } else {
      throw ConfigInvalid("unknown step `" + name + "`");
    }
    scenario.steps.push_back(std::move(step));
  }
  return scenario;
}

ScenarioRunner::ScenarioRunner(ScenarioOptions options)
    : options_(std::move(options)),
      clock_(SimClock::Mode::Simulated, options_.clock_start) {
  if (options_.store_path.empty()) {
    options_.store_path = fresh_temp_store();
    store_is_temp_ = true;
  }

  RouterConfig config;
  config.realms = {"clinic"};
  router_ = Router::create(config);
  router_->start();
  if (options_.socket_mode) {
    tcp_ = std::make_unique<TcpServer>(router_, Endpoint{"127.0.0.1", 0});
    tcp_->start();
  }

  robot_ = std::make_shared<sim::RobotSim>([this] { return clock_.now().iso() + ":00Z"; });
  robot_node_ = std::make_unique<sim::RobotNode>(make_connection(), robot_);
  robot_node_->start();

  sim::ExerciseConfig exercise_defaults = sim::ExerciseConfig::defaults();
  exercise_defaults.seed = options_.remedes_seed;
  remedes_ = std::make_shared<sim::RemedesController>(exercise_defaults, /*auto_run=*/true);
  remedes_node_ = std::make_unique<sim::RemedesNode>(make_connection(), remedes_);
  remedes_node_->start();

  services_ = std::make_unique<sim::ServicesNode>(make_connection(),
                                                  [this] { return clock_.now(); });
  services_->start();

  store_ = std::make_unique<ActivityStore>(options_.store_path);
  app_ = std::make_unique<CalendarApp>(make_connection(), *store_, clock_);
  app_->set_results_poll(std::chrono::milliseconds(0), 5);

  probe_ = make_connection();
  subscribe_probe("remedes.results");
}

ScenarioRunner::~ScenarioRunner() {
  for (auto& conn : connections_) conn->close();
  if (tcp_) tcp_->stop();
  router_->stop();
  if (store_is_temp_) {
    store_.reset();
    std::error_code ec;
    std::filesystem::remove(options_.store_path, ec);
  }
}

std::shared_ptr<PeerConnection> ScenarioRunner::make_connection() {
  auto conn = options_.socket_mode
                  ? PeerConnection::connect_tcp("127.0.0.1", tcp_->port(), "clinic")
                  : PeerConnection::connect_local(router_, "clinic");
  connections_.push_back(conn);
  return conn;
}

void ScenarioRunner::subscribe_probe(const std::string& topic) {
  if (probe_topics_.count(topic)) return;
  probe_topics_.insert(topic);
  probe_->subscribe(topic, [this](const std::string& on_topic, const Payload& payload) {
    std::lock_guard lock(events_mutex_);
    events_[on_topic].push_back(payload);
  });
}

void ScenarioRunner::settle() {
  // The fence ack is queued behind any earlier EVENT on the probe's inbox,
  // so once it returns all prior events have been handled.
  probe_->publish("scenario.fence", Payload::object());
}

std::vector<Json> ScenarioRunner::events(const std::string& topic) const {
  std::lock_guard lock(events_mutex_);
  auto it = events_.find(topic);
  return it == events_.end() ? std::vector<Json>{} : it->second;
}

int ScenarioRunner::run(const Scenario& scenario) {
  for (const auto& step : scenario.steps) {
    if (step.kind == ScenarioStep::Kind::ExpectEvent) subscribe_probe(step.topic);
  }
  for (const auto& step : scenario.steps) {
    std::string detail;
    bool ok = false;
    try {
      ok = execute(step, detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const bool is_expect = step.kind == ScenarioStep::Kind::ExpectSpeech ||
                           step.kind == ScenarioStep::Kind::ExpectEvent ||
                           step.kind == ScenarioStep::Kind::ExpectStoreCount;
    if (!ok) {
      std::printf("FAIL %s%s%s\n", step.describe().c_str(), detail.empty() ? "" : " -- ",
                  detail.c_str());
      std::fflush(stdout);
      return 1;
    }
    if (is_expect) {
      std::printf("ok   %s\n", step.describe().c_str());
    } else {
      std::printf("..   %s%s%s\n", step.describe().c_str(), detail.empty() ? "" : " -- ",
                  detail.c_str());
    }
    std::fflush(stdout);
  }
  return 0;
}

bool ScenarioRunner::execute(const ScenarioStep& step, std::string& detail) {
  switch (step.kind) {
    case ScenarioStep::Kind::EnqueueUtterance: {
      robot_->enqueue_utterance(step.text);
      const auto stored = app_->run_store_flow();
      detail = "stored " + std::to_string(stored.size()) + " activities";
      return true;
    }
    case ScenarioStep::Kind::AdvanceClock: {
      if (step.advance_to) {
        clock_.advance_to(*step.advance_to);
      } else {
        clock_.advance_by_minutes(step.advance_minutes.value_or(0));
      }
      app_->tick();
      detail = "now " + clock_.now().iso();
      return true;
    }
    case ScenarioStep::Kind::ExpectSpeech:
      if (robot_->speech_contains(step.text)) return true;
      detail = "speech log has " + std::to_string(robot_->speech_log().size()) + " entries";
      return false;
    case ScenarioStep::Kind::ExpectEvent: {
      settle();
      for (const auto& payload : events(step.topic)) {
        if (payload.contains(step.key) && payload[step.key] == step.value) return true;
      }
      detail = "no matching event among " + std::to_string(events(step.topic).size());
      return false;
    }
    case ScenarioStep::Kind::ExpectStoreCount: {
      const std::size_t actual = store_->size();
      if (actual == step.count) return true;
      detail = "store has " + std::to_string(actual);
      return false;
    }
  }
  return false;
}

}  // namespace iotmesh::app
