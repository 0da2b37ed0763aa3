#ifndef IOTMESH_CALENDAR_HPP
#define IOTMESH_CALENDAR_HPP

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotmesh/client.hpp"
#include "iotmesh/datetime.hpp"
#include "iotmesh/reminder_nlp.hpp"

namespace iotmesh::app {

// One calendar entry. FIRED entries are never fired again; recurrence
// spawns a fresh PENDING successor instead.
struct Activity {
  enum class Status { Pending, Fired };

  std::int64_t id = 0;
  DateTime when;
  std::string body;
  bool recurring = false;
  std::optional<int> repeat_interval_days;
  Status status = Status::Pending;

  Json to_json() const;
  static std::optional<Activity> from_json(const Json& record);
  static Activity from_extraction(const nlp::TemporalExtraction& extraction);

  friend bool operator==(const Activity&, const Activity&) = default;
};

// Append-only record store: one JSON record per line, last record per id
// wins on replay. Stands in for the original deployment's SQL database.
class ActivityStore {
 public:
  explicit ActivityStore(std::filesystem::path path);

  // Assigns the next id, persists, returns the stored activity.
  Activity insert(Activity activity);
  // Persists the new state of an existing activity (full-record append).
  void update(const Activity& activity);

  std::vector<Activity> all() const;      // live records, id order
  std::vector<Activity> pending() const;  // status == Pending, id order
  std::optional<Activity> get(std::int64_t id) const;
  std::size_t size() const;

  // Rewrites the log to one line per live record.
  void compact();
  std::size_t log_lines() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  void replay();
  void append_locked(const Json& record);

  mutable std::mutex mutex_;
  std::filesystem::path path_;
  std::ofstream out_;
  std::map<std::int64_t, Activity> live_;
  std::int64_t next_id_ = 1;
  std::size_t log_lines_ = 0;
};

// Explicitly advanced clock for deterministic runs; WALL mode reads the
// system clock and cannot be advanced.
class SimClock {
 public:
  enum class Mode { Wall, Simulated };

  explicit SimClock(Mode mode = Mode::Simulated,
                    DateTime start = DateTime{2000, 1, 1, 0, 0});

  DateTime now() const;
  Mode mode() const { return mode_; }

  // Simulated mode only; time never moves backwards.
  void advance_to(const DateTime& to);
  void advance_by_minutes(std::int64_t minutes);

 private:
  Mode mode_;
  mutable std::mutex mutex_;
  DateTime current_;
};

// The two calendar flows: activity capture (record -> transcribe -> parse
// -> persist) and the reminder loop (fire due activities, run the REMEDES
// flow, publish results, schedule recurrences).
class CalendarApp {
 public:
  CalendarApp(std::shared_ptr<PeerConnection> conn, ActivityStore& store, SimClock& clock);

  // nao.record -> rpi.speech_recognition -> rpi.reminder(now=clock) ->
  // one PENDING activity per extraction. Propagates routed errors
  // (e.g. err.no_utterance).
  std::vector<Activity> run_store_flow();

  // PENDING activities with scheduled time <= now, ordered by (time, id).
  std::vector<Activity> due() const;

  // Speaks the reminder (REMEDES bodies trigger the exercise flow and the
  // result publication), marks FIRED, schedules the recurrence successor.
  // Returns false and leaves the activity PENDING when an endpoint fails.
  bool fire(const Activity& activity);

  // Inserts the successor entry repeat_interval_days later.
  Activity schedule_next(const Activity& activity);

  // One pass: fire everything due, in order.
  void tick();

  // Wall-clock loop; returns when *stop becomes true.
  void run_loop(std::chrono::milliseconds tick_interval, const std::atomic<bool>* stop);

  void set_results_poll(std::chrono::milliseconds interval, int attempts);

 private:
  std::shared_ptr<PeerConnection> conn_;
  ActivityStore& store_;
  SimClock& clock_;
  std::chrono::milliseconds poll_interval_{100};
  int poll_attempts_ = 600;
};

}  // namespace iotmesh::app

#endif
