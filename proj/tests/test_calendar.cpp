#include <doctest.h>

#include <atomic>
#include <thread>

#include "iotmesh/calendar.hpp"
#include "iotmesh/errors.hpp"
#include "iotmesh/robot.hpp"
#include "iotmesh/scenario.hpp"
#include "iotmesh/services.hpp"
#include "support/temp_files.hpp"

using namespace iotmesh;
using namespace iotmesh::app;

namespace {

const char* kUtterance =
    "Remind me to take the medicine every day after lunch. "
    "Furthermore, remind me to practice REMEDES on Sundays nights";

ScenarioOptions options_with_store(const std::filesystem::path& store) {
  ScenarioOptions options;
  options.store_path = store;
  return options;
}

}  // namespace

TEST_SUITE("calendar") {

TEST_CASE("activity store replay, update and compaction") {
  testsupport::TempFile file("", ".log");
  {
    ActivityStore store(file.path());
    Activity a;
    a.when = DateTime{2017, 10, 18, 14, 0};
    a.body = "take the medicine";
    a.recurring = true;
    a.repeat_interval_days = 1;
    const Activity stored = store.insert(a);
    CHECK(stored.id == 1);
    Activity b = stored;
    b.status = Activity::Status::Fired;
    store.update(b);
    Activity c;
    c.when = DateTime{2017, 10, 22, 20, 0};
    c.body = "practice REMEDES";
    store.insert(c);
    CHECK(store.size() == 2);
    CHECK(store.log_lines() == 3);
  }
  {
    ActivityStore store(file.path());
    CHECK(store.size() == 2);
    REQUIRE(store.get(1).has_value());
    CHECK(store.get(1)->status == Activity::Status::Fired);
    CHECK(store.get(2)->body == "practice REMEDES");
    // Fresh ids continue after the replayed maximum.
    Activity d;
    d.when = DateTime{2017, 10, 23, 9, 0};
    d.body = "stretch";
    CHECK(store.insert(d).id == 3);
    store.compact();
    CHECK(store.log_lines() == 3);
    CHECK(store.size() == 3);
  }
  {
    ActivityStore store(file.path());
    CHECK(store.size() == 3);
  }
}

TEST_CASE("a churned log compacts itself on reopen") {
  testsupport::TempFile file("", ".log");
  {
    ActivityStore store(file.path());
    Activity a;
    a.when = DateTime{2017, 10, 18, 14, 0};
    a.body = "churn";
    Activity stored = store.insert(a);
    for (int i = 0; i < 200; ++i) {
      stored.status = i % 2 == 0 ? Activity::Status::Fired : Activity::Status::Pending;
      store.update(stored);
    }
    CHECK(store.log_lines() == 201);
  }
  {
    ActivityStore store(file.path());
    CHECK(store.size() == 1);
    CHECK(store.log_lines() == 1);
  }
}

TEST_CASE("store flow persists the worked example as pending activities") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 18, 10, 0});
  runner.robot().enqueue_utterance(kUtterance);

  const auto stored = runner.calendar().run_store_flow();
  REQUIRE(stored.size() == 2);
  CHECK(stored[0].when == DateTime{2017, 10, 18, 14, 0});
  CHECK(stored[0].body == "take the medicine");
  CHECK(stored[0].recurring);
  CHECK(stored[0].repeat_interval_days == 1);
  CHECK(stored[0].status == Activity::Status::Pending);
  CHECK(stored[1].when == DateTime{2017, 10, 22, 20, 0});
  CHECK(stored[1].body == "practice REMEDES");
  CHECK(stored[1].repeat_interval_days == 7);
  CHECK(runner.store().size() == 2);
}

TEST_CASE("store flow with non-reminder speech persists nothing") {
  ScenarioRunner runner;
  runner.robot().enqueue_utterance("hello");
  CHECK(runner.calendar().run_store_flow().empty());
  CHECK(runner.store().size() == 0);
}

TEST_CASE("store flow surfaces an empty microphone queue") {
  ScenarioRunner runner;
  try {
    runner.calendar().run_store_flow();
    FAIL("expected CallError");
  } catch (const CallError& e) {
    CHECK(e.reason() == errs::no_utterance);
  }
}

TEST_CASE("due respects the <= now rule and orders by time then id") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 18, 10, 0});
  Activity a;
  a.when = DateTime{2017, 10, 18, 14, 0};
  a.body = "take the medicine";
  runner.store().insert(a);

  CHECK(runner.calendar().due().empty());  // 10:00 < 14:00

  runner.clock().advance_to(DateTime{2017, 10, 18, 13, 59});
  CHECK(runner.calendar().due().empty());

  runner.clock().advance_to(DateTime{2017, 10, 18, 14, 0});
  REQUIRE(runner.calendar().due().size() == 1);

  // A missed tick still sees the activity afterwards.
  runner.clock().advance_to(DateTime{2017, 10, 18, 14, 5});
  REQUIRE(runner.calendar().due().size() == 1);

  Activity b;
  b.when = DateTime{2017, 10, 18, 14, 0};
  b.body = "also due";
  runner.store().insert(b);
  const auto due = runner.calendar().due();
  REQUIRE(due.size() == 2);
  CHECK(due[0].id < due[1].id);  // same minute: id order
}

TEST_CASE("firing a plain reminder speaks and schedules the successor") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 18, 14, 0});
  Activity a;
  a.when = DateTime{2017, 10, 18, 14, 0};
  a.body = "take the medicine";
  a.recurring = true;
  a.repeat_interval_days = 1;
  const Activity stored = runner.store().insert(a);

  REQUIRE(runner.calendar().fire(stored));
  CHECK(runner.robot().speech_contains("Remember, you must take the medicine"));
  CHECK(runner.store().get(stored.id)->status == Activity::Status::Fired);

  const auto all = runner.store().all();
  REQUIRE(all.size() == 2);
  CHECK(all[1].when == DateTime{2017, 10, 19, 14, 0});
  CHECK(all[1].status == Activity::Status::Pending);
  CHECK(all[1].body == "take the medicine");
}

TEST_CASE("firing a REMEDES reminder runs the exercise and publishes results") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 22, 20, 0});
  Activity a;
  a.when = DateTime{2017, 10, 22, 20, 0};
  a.body = "practice REMEDES";
  a.recurring = true;
  a.repeat_interval_days = 7;
  const Activity stored = runner.store().insert(a);

  REQUIRE(runner.calendar().fire(stored));
  CHECK(runner.robot().speech_contains("It's time to practice REMEDES!"));
  CHECK(runner.robot().speech_contains("Your mean reaction time was"));

  runner.settle();
  const auto events = runner.events("remedes.results");
  REQUIRE(events.size() == 1);
  CHECK(events[0]["completed"] == true);
  CHECK(events[0]["per_step"].size() == 4);
  CHECK(events[0].contains("mean_ms"));

  const auto all = runner.store().all();
  REQUIRE(all.size() == 2);
  CHECK(all[1].when == DateTime{2017, 10, 29, 20, 0});
}

TEST_CASE("schedule_next is calendar-correct") {
  ScenarioRunner runner;
  Activity a;
  a.when = DateTime{2017, 10, 31, 9, 0};
  a.body = "flip the calendar";
  a.recurring = true;
  a.repeat_interval_days = 1;
  const Activity stored = runner.store().insert(a);
  CHECK(runner.calendar().schedule_next(stored).when == DateTime{2017, 11, 1, 9, 0});

  Activity b = stored;
  b.when = DateTime{2017, 12, 28, 9, 0};
  b.repeat_interval_days = 7;
  CHECK(runner.calendar().schedule_next(b).when == DateTime{2018, 1, 4, 9, 0});
}

TEST_CASE("a fired activity is never fired again") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 18, 14, 0});
  Activity a;
  a.when = DateTime{2017, 10, 18, 14, 0};
  a.body = "take the medicine";
  runner.store().insert(a);

  runner.calendar().tick();
  runner.calendar().tick();
  runner.clock().advance_to(DateTime{2017, 10, 18, 14, 1});
  runner.calendar().tick();

  std::size_t mentions = 0;
  for (const auto& entry : runner.robot().speech_log()) {
    if (entry.text.find("take the medicine") != std::string::npos) mentions++;
  }
  CHECK(mentions == 1);
}

TEST_CASE("recurrence chain: N days of a daily activity leave N+1 entries") {
  ScenarioRunner runner;
  runner.clock().advance_to(DateTime{2017, 10, 18, 10, 0});
  runner.robot().enqueue_utterance("Remind me to take the medicine every day after lunch");
  runner.calendar().run_store_flow();

  const int days = 5;
  for (int d = 0; d < days; ++d) {
    runner.clock().advance_to(DateTime{2017, 10, 18 + d, 14, 0});
    runner.calendar().tick();
  }

  std::vector<Activity> chain;
  for (const auto& activity : runner.store().all()) {
    if (activity.body == "take the medicine") chain.push_back(activity);
  }
  REQUIRE(chain.size() == days + 1);
  for (int d = 0; d <= days; ++d) {
    CHECK(chain[static_cast<std::size_t>(d)].when == DateTime{2017, 10, 18 + d, 14, 0});
    const bool fired = d < days;
    CHECK((chain[static_cast<std::size_t>(d)].status == Activity::Status::Fired) == fired);
  }
}

TEST_CASE("restart between ticks loses nothing and never double-fires") {
  testsupport::TempFile file("", ".log");
  {
    ScenarioRunner runner(options_with_store(file.path()));
    runner.clock().advance_to(DateTime{2017, 10, 18, 10, 0});
    runner.robot().enqueue_utterance(kUtterance);
    runner.calendar().run_store_flow();
    CHECK(runner.store().size() == 2);
  }
  {
    ScenarioRunner runner(options_with_store(file.path()));
    CHECK(runner.store().pending().size() == 2);
    runner.clock().advance_to(DateTime{2017, 10, 18, 14, 0});
    runner.calendar().tick();
    CHECK(runner.robot().speech_contains("Remember, you must take the medicine"));
  }
  {
    ScenarioRunner runner(options_with_store(file.path()));
    CHECK(runner.store().size() == 3);
    runner.clock().advance_to(DateTime{2017, 10, 18, 14, 0});
    runner.calendar().tick();  // same instant again: nothing new fires
    CHECK_FALSE(runner.robot().speech_contains("take the medicine"));
    std::size_t fired = 0;
    for (const auto& activity : runner.store().all()) {
      if (activity.status == Activity::Status::Fired) fired++;
    }
    CHECK(fired == 1);
  }
}

TEST_CASE("endpoint failure leaves the activity pending for retry") {
  // Hand-built stack with no REMEDES node.
  RouterConfig config;
  config.realms = {"clinic"};
  auto router = Router::create(config);
  auto robot = std::make_shared<sim::RobotSim>();
  auto robot_conn = PeerConnection::connect_local(router, "clinic");
  sim::RobotNode robot_node(robot_conn, robot);
  robot_node.start();

  testsupport::TempFile file("", ".log");
  ActivityStore store(file.path());
  SimClock clock(SimClock::Mode::Simulated, DateTime{2017, 10, 22, 20, 0});
  auto app_conn = PeerConnection::connect_local(router, "clinic");
  CalendarApp calendar(app_conn, store, clock);

  Activity a;
  a.when = DateTime{2017, 10, 22, 20, 0};
  a.body = "practice REMEDES";
  const Activity stored = store.insert(a);

  CHECK_FALSE(calendar.fire(stored));
  CHECK(store.get(stored.id)->status == Activity::Status::Pending);
  CHECK(store.size() == 1);  // no successor scheduled

  app_conn->close();
  robot_conn->close();
}

TEST_CASE("wall-clock reminder loop fires overdue activities") {
  RouterConfig config;
  config.realms = {"clinic"};
  auto router = Router::create(config);
  auto robot = std::make_shared<sim::RobotSim>();
  auto robot_conn = PeerConnection::connect_local(router, "clinic");
  sim::RobotNode robot_node(robot_conn, robot);
  robot_node.start();

  testsupport::TempFile file("", ".log");
  ActivityStore store(file.path());
  SimClock clock(SimClock::Mode::Wall);
  auto app_conn = PeerConnection::connect_local(router, "clinic");
  CalendarApp calendar(app_conn, store, clock);

  Activity overdue;
  overdue.when = DateTime{2000, 1, 1, 0, 0};
  overdue.body = "stretch";
  store.insert(overdue);

  std::atomic<bool> stop{false};
  std::thread loop([&] { calendar.run_loop(std::chrono::milliseconds(5), &stop); });
  for (int i = 0; i < 200 && !robot->speech_contains("stretch"); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  stop = true;
  loop.join();
  CHECK(robot->speech_contains("Remember, you must stretch"));

  app_conn->close();
  robot_conn->close();
}

TEST_CASE("sim clock invariants") {
  SimClock clock(SimClock::Mode::Simulated, DateTime{2017, 10, 18, 10, 0});
  clock.advance_by_minutes(30);
  CHECK(clock.now() == DateTime{2017, 10, 18, 10, 30});
  CHECK_THROWS_AS(clock.advance_to(DateTime{2017, 10, 18, 9, 0}), std::invalid_argument);
  CHECK_THROWS_AS(clock.advance_by_minutes(-5), std::invalid_argument);

  SimClock wall(SimClock::Mode::Wall);
  CHECK_THROWS_AS(wall.advance_by_minutes(1), std::logic_error);
  CHECK(wall.now().valid());
}

}  // TEST_SUITE
