#include "iotmesh/calendar.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "iotmesh/errors.hpp"
#include "iotmesh/logging.hpp"

namespace iotmesh::app {

namespace {

const char* status_name(Activity::Status status) {
  return status == Activity::Status::Pending ? "PENDING" : "FIRED";
}

std::string format_mean_ms(double mean) {
  if (mean == std::floor(mean)) return std::to_string(static_cast<long long>(mean));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", mean);
  return buf;
}

}  // namespace

Json Activity::to_json() const {
  Json record{{"id", id},         {"year", when.year},   {"month", when.month},
              {"day", when.day},  {"hour", when.hour},   {"minute", when.minute},
              {"body", body},     {"recurring", recurring},
              {"status", status_name(status)}};
  if (recurring) record["repeat_interval_days"] = *repeat_interval_days;
  return record;
}

std::optional<Activity> Activity::from_json(const Json& record) {
  if (!record.is_object()) return std::nullopt;
  Activity a;
  try {
    a.id = record.at("id").get<std::int64_t>();
    a.when = DateTime{record.at("year").get<int>(), record.at("month").get<int>(),
                      record.at("day").get<int>(), record.at("hour").get<int>(),
                      record.at("minute").get<int>()};
    a.body = record.at("body").get<std::string>();
    a.recurring = record.at("recurring").get<bool>();
    if (a.recurring) a.repeat_interval_days = record.at("repeat_interval_days").get<int>();
    const std::string status = record.at("status").get<std::string>();
    if (status == "PENDING") {
      a.status = Status::Pending;
    } else if (status == "FIRED") {
      a.status = Status::Fired;
    } else {
      return std::nullopt;
    }
  } catch (const Json::exception&) {
    return std::nullopt;
  }
  if (!a.when.valid() || a.body.empty()) return std::nullopt;
  if (a.recurring && (!a.repeat_interval_days || *a.repeat_interval_days < 1)) return std::nullopt;
  return a;
}

Activity Activity::from_extraction(const nlp::TemporalExtraction& extraction) {
  Activity a;
  a.when = extraction.when();
  a.body = extraction.body;
  a.recurring = extraction.recurring;
  a.repeat_interval_days = extraction.repeat_interval_days;
  a.status = Status::Pending;
  return a;
}

ActivityStore::ActivityStore(std::filesystem::path path) : path_(std::move(path)) {
  replay();
  // Startup compaction keeps the log from growing without bound.
  if (log_lines_ > live_.size() * 4 + 64) compact();
  out_.open(path_, std::ios::app);
}

void ActivityStore::replay() {
  std::ifstream in(path_);
  if (!in.is_open()) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++log_lines_;
    Json record = Json::parse(line, nullptr, false);
    auto activity = Activity::from_json(record);
    if (!activity) {
      logging::warn("store.skipping_bad_record", {{"file", path_.string()}});
      continue;
    }
    next_id_ = std::max(next_id_, activity->id + 1);
    live_[activity->id] = std::move(*activity);
  }
}

void ActivityStore::append_locked(const Json& record) {
  if (!out_.is_open()) out_.open(path_, std::ios::app);
  out_ << canonical_dump(record) << '\n';
  out_.flush();
  ++log_lines_;
}

Activity ActivityStore::insert(Activity activity) {
  std::lock_guard lock(mutex_);
  activity.id = next_id_++;
  append_locked(activity.to_json());
  live_[activity.id] = activity;
  return activity;
}

void ActivityStore::update(const Activity& activity) {
  std::lock_guard lock(mutex_);
  append_locked(activity.to_json());
  live_[activity.id] = activity;
}

std::vector<Activity> ActivityStore::all() const {
  std::lock_guard lock(mutex_);
  std::vector<Activity> out;
  out.reserve(live_.size());
  for (const auto& [id, activity] : live_) out.push_back(activity);
  return out;
}

std::vector<Activity> ActivityStore::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<Activity> out;
  for (const auto& [id, activity] : live_) {
    if (activity.status == Activity::Status::Pending) out.push_back(activity);
  }
  return out;
}

std::optional<Activity> ActivityStore::get(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = live_.find(id);
  if (it == live_.end()) return std::nullopt;
  return it->second;
}

std::size_t ActivityStore::size() const {
  std::lock_guard lock(mutex_);
  return live_.size();
}

std::size_t ActivityStore::log_lines() const {
  std::lock_guard lock(mutex_);
  return log_lines_;
}

void ActivityStore::compact() {
  std::lock_guard lock(mutex_);
  if (out_.is_open()) out_.close();
  const auto tmp = path_.string() + ".compact";
  {
    std::ofstream fresh(tmp, std::ios::trunc);
    for (const auto& [id, activity] : live_) {
      fresh << canonical_dump(activity.to_json()) << '\n';
    }
  }
  std::filesystem::rename(tmp, path_);
  log_lines_ = live_.size();
  out_.open(path_, std::ios::app);
}

SimClock::SimClock(Mode mode, DateTime start) : mode_(mode), current_(start) {}

DateTime SimClock::now() const {
  if (mode_ == Mode::Wall) return wall_now();
  std::lock_guard lock(mutex_);
  return current_;
}

void SimClock::advance_to(const DateTime& to) {
  if (mode_ == Mode::Wall) throw std::logic_error("wall clock cannot be advanced");
  std::lock_guard lock(mutex_);
  if (to < current_) throw std::invalid_argument("simulated time only moves forward");
  current_ = to;
}

void SimClock::advance_by_minutes(std::int64_t minutes) {
  if (mode_ == Mode::Wall) throw std::logic_error("wall clock cannot be advanced");
  if (minutes < 0) throw std::invalid_argument("simulated time only moves forward");
  std::lock_guard lock(mutex_);
  current_ = current_.plus_minutes(minutes);
}

CalendarApp::CalendarApp(std::shared_ptr<PeerConnection> conn, ActivityStore& store,
                         SimClock& clock)
    : conn_(std::move(conn)), store_(store), clock_(clock) {}

void CalendarApp::set_results_poll(std::chrono::milliseconds interval, int attempts) {
  poll_interval_ = interval;
  poll_attempts_ = attempts;
}

std::vector<Activity> CalendarApp::run_store_flow() {
  const Payload audio = conn_->call("nao.record");
  const Payload transcript = conn_->call("rpi.speech_recognition", audio);
  const Payload parsed = conn_->call(
      "rpi.reminder", Payload{{"text", transcript.value("text", "")},
                              {"now", clock_.now().iso()}});

  std::vector<Activity> stored;
  if (!parsed.contains("extractions") || !parsed["extractions"].is_array()) return stored;
  for (const auto& record : parsed["extractions"]) {
    auto extraction = nlp::TemporalExtraction::from_payload(record);
    if (!extraction) {
      logging::warn("calendar.bad_extraction", {{"record", canonical_dump(record)}});
      continue;
    }
    stored.push_back(store_.insert(Activity::from_extraction(*extraction)));
  }
  logging::info("calendar.stored", {{"count", std::to_string(stored.size())}});
  return stored;
}

std::vector<Activity> CalendarApp::due() const {
  const DateTime now = clock_.now();
  std::vector<Activity> out;
  for (const auto& activity : store_.pending()) {
    if (activity.when <= now) out.push_back(activity);
  }
  std::sort(out.begin(), out.end(), [](const Activity& a, const Activity& b) {
    if (a.when != b.when) return a.when < b.when;
    return a.id < b.id;
  });
  return out;
}

bool CalendarApp::fire(const Activity& activity) {
  std::string upper = activity.body;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  const bool remedes = upper.find("REMEDES") != std::string::npos;

  try {
    if (remedes) {
      conn_->call("nao.speak", Payload{{"text", "It's time to practice REMEDES!"}});
      const Payload started = conn_->call("remedes.exercise.start");

      Payload results;
      bool completed = false;
      for (int attempt = 0; attempt < poll_attempts_; ++attempt) {
        results = conn_->call("remedes.exercise.results",
                              Payload{{"exercise_id", started.value("exercise_id", 0)}});
        if (results.value("completed", false)) {
          completed = true;
          break;
        }
        if (poll_interval_.count() > 0) std::this_thread::sleep_for(poll_interval_);
      }
      if (!completed) {
        logging::error("calendar.exercise_never_completed",
                       {{"activity", std::to_string(activity.id)}});
        return false;
      }
      conn_->call("nao.speak",
                  Payload{{"text", "Your mean reaction time was " +
                                       format_mean_ms(results.value("mean_ms", 0.0)) +
                                       " milliseconds"}});
      conn_->publish("remedes.results", results);
    } else {
      conn_->call("nao.speak", Payload{{"text", "Remember, you must " + activity.body}});
    }
  } catch (const CallError& e) {
    logging::warn("calendar.fire_failed",
                  {{"activity", std::to_string(activity.id)}, {"why", e.reason()}});
    return false;
  } catch (const ConnectionLost& e) {
    logging::warn("calendar.fire_failed",
                  {{"activity", std::to_string(activity.id)}, {"why", e.what()}});
    return false;
  }

  Activity fired = activity;
  fired.status = Activity::Status::Fired;
  store_.update(fired);
  if (fired.recurring) schedule_next(fired);
  return true;
}

Activity CalendarApp::schedule_next(const Activity& activity) {
  Activity next = activity;
  next.id = 0;
  next.when = activity.when.plus_days(activity.repeat_interval_days.value_or(1));
  next.status = Activity::Status::Pending;
  next = store_.insert(next);
  logging::info("calendar.scheduled_next", {{"activity", std::to_string(next.id)},
                                            {"date", next.when.iso()}});
  return next;
}

void CalendarApp::tick() {
  for (const auto& activity : due()) {
    // Re-read: an earlier fire this tick may have touched the store.
    auto current = store_.get(activity.id);
    if (!current || current->status != Activity::Status::Pending) continue;
    fire(*current);
  }
}

void CalendarApp::run_loop(std::chrono::milliseconds tick_interval,
                           const std::atomic<bool>* stop) {
  while (stop == nullptr || !stop->load()) {
    tick();
    std::this_thread::sleep_for(tick_interval);
  }
}

}  // namespace iotmesh::app
