// iotmesh: run the router, the simulated nodes, the calendar app, scripted
// scenarios, a doctor-style subscriber, or the reminder parser from one
// binary. Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <optional>
#include <thread>

#include "iotmesh/calendar.hpp"
#include "iotmesh/config.hpp"
#include "iotmesh/logging.hpp"
#include "iotmesh/remedes.hpp"
#include "iotmesh/rest_bridge.hpp"
#include "iotmesh/robot.hpp"
#include "iotmesh/router.hpp"
#include "iotmesh/scenario.hpp"
#include "iotmesh/services.hpp"
#include "iotmesh/tcp.hpp"

namespace {

using namespace iotmesh;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

void install_signal_handlers() {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
}

void wait_for_stop() {
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

struct RouterAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 9000;
};

RouterAddress parse_address(const std::string& text) {
  RouterAddress addr;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw CLI::ValidationError("--router", "expected host:port");
  }
  addr.host = text.substr(0, colon);
  const int port = std::stoi(text.substr(colon + 1));
  if (port < 1 || port > 65535) throw CLI::ValidationError("--router", "port out of range");
  addr.port = static_cast<std::uint16_t>(port);
  return addr;
}

int run_router(const std::string& config_path) {
  RouterConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  if (std::getenv("IOTMESH_LOG") == nullptr) logging::set_level(config.log_level);

  auto router = Router::create(config);
  router->start();
  TcpServer server(router, config.listen);
  std::optional<RestBridge> bridge;
  try {
    server.start();
    if (config.rest_bridge.enabled) {
      bridge.emplace(router, config.realms.front(), config.rest_bridge.listen);
      bridge->start();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "startup failed: %s\n", e.what());
    return 1;
  }
  wait_for_stop();
  if (bridge) bridge->stop();
  server.stop();
  router->stop();
  return 0;
}

int run_node(const std::string& kind, const RouterAddress& addr, const std::string& realm,
             const std::string& remedes_config) {
  std::shared_ptr<PeerConnection> conn;
  try {
    conn = PeerConnection::connect_tcp(addr.host, addr.port, realm);
  } catch (const ConnectFailed& e) {
    std::fprintf(stderr, "connect failed: %s\n", e.what());
    return 1;
  }

  try {
    if (kind == "robot") {
      auto robot = std::make_shared<sim::RobotSim>();
      sim::RobotNode node(conn, robot);
      node.start();
      logging::info("node.ready", {{"kind", kind}});
      wait_for_stop();
    } else if (kind == "remedes") {
      sim::ExerciseConfig defaults = sim::ExerciseConfig::defaults();
      if (!remedes_config.empty()) defaults = sim::ExerciseConfig::from_yaml(remedes_config);
      auto controller = std::make_shared<sim::RemedesController>(defaults, /*auto_run=*/false);
      sim::RemedesNode node(conn, controller);
      node.start();
      logging::info("node.ready", {{"kind", kind}});
      // Real-time driver: simulated ms track wall-clock ms.
      auto last = std::chrono::steady_clock::now();
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        const auto now = std::chrono::steady_clock::now();
        controller->advance(
            std::chrono::duration_cast<std::chrono::milliseconds>(now - last).count());
        last = now;
      }
    } else if (kind == "services") {
      sim::ServicesNode node(conn);
      node.start();
      logging::info("node.ready", {{"kind", kind}});
      wait_for_stop();
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "node failed: %s\n", e.what());
    return 1;
  }
  conn->close();
  return 0;
}

int run_calendar(const RouterAddress& addr, const std::string& realm, const std::string& store,
                 int tick_ms) {
  try {
    auto conn = PeerConnection::connect_tcp(addr.host, addr.port, realm);
    app::ActivityStore activity_store{store};
    app::SimClock clock{app::SimClock::Mode::Wall};
    app::CalendarApp calendar(conn, activity_store, clock);
    logging::info("calendar.ready", {{"store", store}});
    calendar.run_loop(std::chrono::milliseconds(tick_ms), &g_stop);
    conn->close();
  } catch (const ConnectFailed& e) {
    std::fprintf(stderr, "connect failed: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "calendar failed: %s\n", e.what());
    return 1;
  }
  return 0;
}

int run_scenario(const std::string& path, bool socket_mode, const std::string& store,
                 std::uint64_t seed) {
  app::Scenario scenario;
  try {
    scenario = app::load_scenario(path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return 2;
  }
  try {
    app::ScenarioOptions options;
    options.socket_mode = socket_mode;
    options.remedes_seed = seed;
    if (!store.empty()) options.store_path = store;
    app::ScenarioRunner runner(options);
    return runner.run(scenario);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario failed: %s\n", e.what());
    return 1;
  }
}

int run_subscribe(const std::string& topic, const RouterAddress& addr, const std::string& realm) {
  try {
    auto conn = PeerConnection::connect_tcp(addr.host, addr.port, realm);
    conn->subscribe(topic, [](const std::string& on_topic, const Payload& payload) {
      std::printf("%s %s %s\n", iso8601_utc_now().c_str(), on_topic.c_str(),
                  canonical_dump(payload).c_str());
      std::fflush(stdout);
    });
    wait_for_stop();
    conn->close();
  } catch (const ConnectFailed& e) {
    std::fprintf(stderr, "connect failed: %s\n", e.what());
    return 1;
  } catch (const CallError& e) {
    std::fprintf(stderr, "subscribe failed: %s\n", e.reason().c_str());
    return 1;
  }
  return 0;
}

int run_parse(const std::string& now_iso, const std::vector<std::string>& words) {
  nlp::ReferenceClock ref{wall_now()};
  if (!now_iso.empty()) {
    auto parsed = DateTime::from_iso(now_iso);
    if (!parsed) {
      std::fprintf(stderr, "cannot parse --now value: %s\n", now_iso.c_str());
      return 2;
    }
    ref.now = *parsed;
  }
  std::string text;
  for (const auto& word : words) {
    if (!text.empty()) text += ' ';
    text += word;
  }
  for (const auto& extraction : nlp::parse_reminders(text, ref)) {
    std::printf("%s\n", canonical_dump(extraction.to_payload()).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();

  CLI::App cli{"desk-scale IoT mesh: message router, REST bridge and simulated nodes"};
  cli.require_subcommand(1);

  std::string config_path;
  auto* router_cmd = cli.add_subcommand("router", "run the message router");
  router_cmd->add_option("--config", config_path, "YAML config file")->required();

  std::string node_kind;
  std::string router_addr = "127.0.0.1:9000";
  std::string realm = "clinic";
  std::string remedes_config;
  auto* node_cmd = cli.add_subcommand("node", "run a simulated node");
  node_cmd->add_option("kind", node_kind, "robot|remedes|services")
      ->required()
      ->check(CLI::IsMember({"robot", "remedes", "services"}));
  node_cmd->add_option("--router", router_addr, "router host:port");
  node_cmd->add_option("--realm", realm, "realm to join");
  node_cmd->add_option("--remedes-config", remedes_config, "exercise defaults YAML");

  std::string app_kind;
  std::string store_path = "activities.log";
  int tick_ms = 1000;
  auto* app_cmd = cli.add_subcommand("app", "run an application");
  app_cmd->add_option("kind", app_kind, "calendar")->required()->check(CLI::IsMember({"calendar"}));
  app_cmd->add_option("--router", router_addr, "router host:port");
  app_cmd->add_option("--realm", realm, "realm to join");
  app_cmd->add_option("--store", store_path, "activity store file");
  app_cmd->add_option("--tick-ms", tick_ms, "reminder loop tick interval");

  std::string scenario_verb;
  std::string scenario_path;
  std::string scenario_store;
  bool scenario_socket = false;
  std::uint64_t scenario_seed = 42;
  auto* scenario_cmd = cli.add_subcommand("scenario", "replay a scripted scenario");
  scenario_cmd->add_option("verb", scenario_verb, "run")->required()->check(CLI::IsMember({"run"}));
  scenario_cmd->add_option("path", scenario_path, "scenario YAML file")->required();
  scenario_cmd->add_flag("--socket", scenario_socket, "use real TCP between components");
  scenario_cmd->add_option("--store", scenario_store, "activity store file (default: temp)");
  scenario_cmd->add_option("--seed", scenario_seed, "reflex exercise seed");

  std::string topic;
  auto* subscribe_cmd = cli.add_subcommand("subscribe", "print events on a topic");
  subscribe_cmd->add_option("topic", topic, "topic uri")->required();
  subscribe_cmd->add_option("--router", router_addr, "router host:port");
  subscribe_cmd->add_option("--realm", realm, "realm to join");

  std::string now_iso;
  std::vector<std::string> parse_text;
  auto* parse_cmd = cli.add_subcommand("parse", "parse reminder text");
  parse_cmd->add_option("--now", now_iso, "reference clock, ISO8601 (YYYY-MM-DDTHH:MM)");
  parse_cmd->add_option("text", parse_text, "reminder text")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (cli.got_subcommand(router_cmd)) return run_router(config_path);
    if (cli.got_subcommand(node_cmd)) {
      return run_node(node_kind, parse_address(router_addr), realm, remedes_config);
    }
    if (cli.got_subcommand(app_cmd)) {
      return run_calendar(parse_address(router_addr), realm, store_path, tick_ms);
    }
    if (cli.got_subcommand(scenario_cmd)) {
      return run_scenario(scenario_path, scenario_socket, scenario_store, scenario_seed);
    }
    if (cli.got_subcommand(subscribe_cmd)) {
      return run_subscribe(topic, parse_address(router_addr), realm);
    }
    if (cli.got_subcommand(parse_cmd)) return run_parse(now_iso, parse_text);
  } catch (const CLI::Error& e) {
    return cli.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
