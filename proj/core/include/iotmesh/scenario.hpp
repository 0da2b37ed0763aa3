#ifndef IOTMESH_SCENARIO_HPP
#define IOTMESH_SCENARIO_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iotmesh/calendar.hpp"
#include "iotmesh/remedes.hpp"
#include "iotmesh/robot.hpp"
#include "iotmesh/router.hpp"
#include "iotmesh/services.hpp"
#include "iotmesh/tcp.hpp"

namespace iotmesh::app {

// One scripted step. Steps run strictly in order; a failed expectation
// aborts the scenario with a nonzero exit.
struct ScenarioStep {
  enum class Kind {
    EnqueueUtterance,  // user dictates; the capture flow runs once
    AdvanceClock,      // move the simulated clock, then one reminder tick
    ExpectSpeech,      // robot speech log contains the substring
    ExpectEvent,       // an event on topic carried payload[key] == value
    ExpectStoreCount,  // live store records == count
  };

  Kind kind = Kind::EnqueueUtterance;
  std::string text;
  std::optional<DateTime> advance_to;
  std::optional<std::int64_t> advance_minutes;
  std::string topic;
  std::string key;
  Json value;
  std::size_t count = 0;

  std::string describe() const;
};

struct Scenario {
  std::vector<ScenarioStep> steps;
};

// YAML list of one-key step maps; same parser family as the router config.
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioOptions {
  std::filesystem::path store_path;  // empty: fresh temp file
  bool socket_mode = false;          // real TCP between components
  std::uint64_t remedes_seed = 42;
  DateTime clock_start{2000, 1, 1, 0, 0};
};

// Boots router + robot + REMEDES + services + calendar app on a simulated
// clock (loopback transports, or TCP with socket_mode) and executes steps.
class ScenarioRunner {
 public:
  explicit ScenarioRunner(ScenarioOptions options = {});
  ~ScenarioRunner();

  // Prints one ok/FAIL line per expectation; 0 when everything passed.
  int run(const Scenario& scenario);

  sim::RobotSim& robot() { return *robot_; }
  ActivityStore& store() { return *store_; }
  SimClock& clock() { return clock_; }
  CalendarApp& calendar() { return *app_; }
  std::shared_ptr<Router> router() { return router_; }

  // Events the doctor probe recorded on a topic (post-settle snapshot).
  std::vector<Json> events(const std::string& topic) const;
  // Blocks until every event published so far has been delivered.
  void settle();
  void subscribe_probe(const std::string& topic);

 private:
  std::shared_ptr<PeerConnection> make_connection();
  bool execute(const ScenarioStep& step, std::string& detail);

  ScenarioOptions options_;
  bool store_is_temp_ = false;
  std::shared_ptr<Router> router_;
  std::unique_ptr<TcpServer> tcp_;
  SimClock clock_;
  std::shared_ptr<sim::RobotSim> robot_;
  std::unique_ptr<sim::RobotNode> robot_node_;
  std::shared_ptr<sim::RemedesController> remedes_;
  std::unique_ptr<sim::RemedesNode> remedes_node_;
  std::unique_ptr<sim::ServicesNode> services_;
  std::unique_ptr<ActivityStore> store_;
  std::unique_ptr<CalendarApp> app_;
  std::vector<std::shared_ptr<PeerConnection>> connections_;
  std::shared_ptr<PeerConnection> probe_;
  mutable std::mutex events_mutex_;
  std::map<std::string, std::vector<Json>> events_;
  std::set<std::string> probe_topics_;
};

}  // namespace iotmesh::app

#endif
