#include <doctest.h>

#include "iotmesh/errors.hpp"
#include "iotmesh/scenario.hpp"
#include "support/temp_files.hpp"

using namespace iotmesh;
using namespace iotmesh::app;

TEST_SUITE("scenario") {

TEST_CASE("scenario file parsing") {
  testsupport::TempFile file(
      "- advance_clock: {to: \"2017-10-18T10:00\"}\n"
      "- enqueue_utterance: \"Remind me to stretch tomorrow\"\n"
      "- expect_store_count: 1\n"
      "- advance_clock: {minutes: 90}\n"
      "- advance_clock: {hours: 2, days: 1}\n"
      "- expect_speech: \"stretch\"\n"
      "- expect_event: {topic: remedes.results, key: completed, value: true}\n");
  const Scenario scenario = load_scenario(file.path());
  REQUIRE(scenario.steps.size() == 7);
  CHECK(scenario.steps[0].kind == ScenarioStep::Kind::AdvanceClock);
  CHECK(scenario.steps[0].advance_to == DateTime{2017, 10, 18, 10, 0});
  CHECK(scenario.steps[1].kind == ScenarioStep::Kind::EnqueueUtterance);
  CHECK(scenario.steps[2].count == 1);
  CHECK(scenario.steps[3].advance_minutes == 90);
  CHECK(scenario.steps[4].advance_minutes == 2 * 60 + 24 * 60);
  CHECK(scenario.steps[6].topic == "remedes.results");
  CHECK(scenario.steps[6].value == Json(true));
}

TEST_CASE("scenario parse errors") {
  CHECK_THROWS_AS(load_scenario("/no/such.scenario"), ConfigNotFound);
  testsupport::TempFile unknown("- frobnicate: 1\n");
  CHECK_THROWS_AS(load_scenario(unknown.path()), ConfigInvalid);
  testsupport::TempFile both("- advance_clock: {to: \"2017-01-01T00:00\", minutes: 5}\n");
  CHECK_THROWS_AS(load_scenario(both.path()), ConfigInvalid);
  testsupport::TempFile notalist("key: value\n");
  CHECK_THROWS_AS(load_scenario(notalist.path()), ConfigInvalid);
}

TEST_CASE("empty scenario passes") {
  testsupport::TempFile file("");
  ScenarioRunner runner;
  CHECK(runner.run(load_scenario(file.path())) == 0);
}

TEST_CASE("the shipped walkthrough scenario passes") {
  const Scenario scenario =
      load_scenario(std::string(IOTMESH_REPO_DIR) + "/configs/clinic_walkthrough.scenario");
  ScenarioRunner runner;
  CHECK(runner.run(scenario) == 0);
  CHECK(runner.events("remedes.results").size() == 1);
}

TEST_CASE("a wrong expectation fails the scenario") {
  testsupport::TempFile file(
      "- advance_clock: {to: \"2017-10-18T10:00\"}\n"
      "- expect_speech: \"this was never said\"\n");
  ScenarioRunner runner;
  CHECK(runner.run(load_scenario(file.path())) == 1);
}

TEST_CASE("store count expectations observe the live store") {
  testsupport::TempFile file(
      "- advance_clock: {to: \"2017-10-18T10:00\"}\n"
      "- enqueue_utterance: \"Remind me to nap tomorrow. Also, remind me to jog tomorrow\"\n"
      "- expect_store_count: 2\n");
  ScenarioRunner runner;
  CHECK(runner.run(load_scenario(file.path())) == 0);
  CHECK(runner.store().size() == 2);
}

}  // TEST_SUITE
