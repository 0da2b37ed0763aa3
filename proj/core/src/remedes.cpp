#include "iotmesh/remedes.hpp"

#include <algorithm>
#include <cmath>

#include "iotmesh/errors.hpp"
#include "iotmesh/logging.hpp"
#include "yaml_util.hpp"

namespace iotmesh::sim {

namespace {

PadColor parse_color(const std::string& name) {
  if (name == "RED") return PadColor::Red;
  if (name == "GREEN") return PadColor::Green;
  if (name == "BLUE") return PadColor::Blue;
  if (name == "WHITE") return PadColor::White;
  throw CallError(errs::bad_payload, {{"what", "unknown color " + name}});
}

Stimulus parse_stimulus(const std::string& name) {
  if (name == "VISUAL") return Stimulus::Visual;
  if (name == "AUDIO") return Stimulus::Audio;
  throw CallError(errs::bad_payload, {{"what", "unknown stimulus " + name}});
}

// Accepts a scalar (applied to every step) or a per-step list.
template <typename T>
std::vector<T> per_step_values(const Json& node, std::size_t steps, const char* key) {
  std::vector<T> out;
  if (node.is_array()) {
    for (const auto& item : node) out.push_back(item.get<T>());
    if (out.size() != steps) {
      throw CallError(errs::bad_payload,
                      {{"what", std::string(key) + " list must match pad_sequence length"}});
    }
  } else {
    out.assign(steps, node.get<T>());
  }
  return out;
}

double uniform_pm1(std::mt19937_64& rng) {
  // 53 random bits -> [0,1) -> [-1,1]
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return unit * 2.0 - 1.0;
}

}  // namespace

const char* pad_color_name(PadColor color) {
  switch (color) {
    case PadColor::Red: return "RED";
    case PadColor::Green: return "GREEN";
    case PadColor::Blue: return "BLUE";
    case PadColor::White: return "WHITE";
  }
  return "?";
}

const char* stimulus_name(Stimulus stimulus) {
  return stimulus == Stimulus::Visual ? "VISUAL" : "AUDIO";
}

ExerciseConfig ExerciseConfig::defaults() {
  ExerciseConfig config;
  const PadColor cycle[] = {PadColor::Red, PadColor::Green, PadColor::Blue, PadColor::White};
  for (int i = 0; i < 4; ++i) {
    config.steps.push_back(PadStep{i, cycle[i % 4], 20.0, 500});
  }
  return config;
}

ExerciseConfig ExerciseConfig::from_payload(const ExerciseConfig& base, const Payload& payload) {
  if (!payload.is_object()) throw CallError(errs::bad_payload, {{"what", "config must be a map"}});
  ExerciseConfig config = base;
  try {
    if (payload.contains("pad_count")) config.pad_count = payload["pad_count"].get<int>();
    if (payload.contains("seed")) config.seed = payload["seed"].get<std::uint64_t>();
    if (payload.contains("stimulus")) {
      config.stimulus = parse_stimulus(payload["stimulus"].get<std::string>());
    }
    if (payload.contains("reaction_model")) {
      const Json& model = payload["reaction_model"];
      if (model.contains("base_ms")) config.reaction.base_ms = model["base_ms"].get<double>();
      if (model.contains("spread_ms")) {
        config.reaction.spread_ms = model["spread_ms"].get<double>();
      }
    }

    std::vector<int> sequence;
    for (const auto& step : config.steps) sequence.push_back(step.pad_id);
    if (payload.contains("pad_sequence")) {
      sequence = payload["pad_sequence"].get<std::vector<int>>();
      if (sequence.empty()) {
        throw CallError(errs::bad_payload, {{"what", "pad_sequence must be non-empty"}});
      }
    }

    std::vector<PadColor> colors;
    if (payload.contains("colors")) {
      const Json& node = payload["colors"];
      if (node.is_string()) {
        colors.assign(1, parse_color(node.get<std::string>()));
      } else {
        for (const auto& item : node) colors.push_back(parse_color(item.get<std::string>()));
      }
    } else {
      for (const auto& step : config.steps) colors.push_back(step.color);
    }
    if (colors.empty()) colors = {PadColor::Red, PadColor::Green, PadColor::Blue, PadColor::White};

    std::vector<double> thresholds;
    if (payload.contains("distance_threshold_cm")) {
      thresholds = per_step_values<double>(payload["distance_threshold_cm"], sequence.size(),
                                           "distance_threshold_cm");
    }
    std::vector<std::int64_t> delays;
    if (payload.contains("trigger_delay_ms")) {
      delays = per_step_values<std::int64_t>(payload["trigger_delay_ms"], sequence.size(),
                                             "trigger_delay_ms");
    }

    const double fallback_threshold =
        base.steps.empty() ? 20.0 : base.steps[0].distance_threshold_cm;
    const std::int64_t fallback_delay = base.steps.empty() ? 500 : base.steps[0].trigger_delay_ms;
    config.steps.clear();
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      PadStep step;
      step.pad_id = sequence[i];
      step.color = colors[i % colors.size()];
      step.distance_threshold_cm = thresholds.empty() ? fallback_threshold : thresholds[i];
      step.trigger_delay_ms = delays.empty() ? fallback_delay : delays[i];
      config.steps.push_back(step);
    }
  } catch (const Json::exception& e) {
    throw CallError(errs::bad_payload, {{"what", e.what()}});
  }
  return config;
}

ExerciseConfig ExerciseConfig::from_yaml(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw ConfigNotFound("exercise config not found: " + path.string());
  }
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigParse("cannot parse " + path.string() + ": " + e.what());
  }
  try {
    return from_payload(defaults(), yaml_to_json(root));
  } catch (const CallError& e) {
    throw ConfigInvalid(e.payload().value("what", e.reason()));
  }
}

Payload ExerciseResult::to_payload() const {
  Json steps = Json::array();
  for (const auto& step : per_step) {
    steps.push_back(Json{{"pad_id", step.pad_id}, {"reaction_ms", step.reaction_ms}});
  }
  return Payload{{"exercise_id", exercise_id}, {"per_step", std::move(steps)},
                 {"mean_ms", mean_ms},         {"min_ms", min_ms},
                 {"max_ms", max_ms},           {"completed", completed}};
}

std::int64_t sample_reaction_ms(const ReactionModel& model, std::mt19937_64& rng) {
  const double raw = model.base_ms + model.spread_ms * uniform_pm1(rng);
  return std::max<std::int64_t>(kReactionFloorMs, std::llround(raw));
}

RemedesController::RemedesController(ExerciseConfig defaults, bool auto_run)
    : defaults_(std::move(defaults)), auto_run_(auto_run) {
  pads_.resize(static_cast<std::size_t>(std::max(1, defaults_.pad_count)));
  for (std::size_t i = 0; i < pads_.size(); ++i) pads_[i].pad_id = static_cast<int>(i);
}

void RemedesController::validate_config_locked(const ExerciseConfig& config) const {
  if (config.steps.empty()) {
    throw CallError(errs::bad_payload, {{"what", "pad_sequence must be non-empty"}});
  }
  for (const auto& step : config.steps) {
    if (step.pad_id < 0 || step.pad_id >= config.pad_count) {
      throw CallError(errs::no_such_pad, {{"pad_id", step.pad_id}});
    }
    if (step.trigger_delay_ms < 0) {
      throw CallError(errs::bad_payload, {{"what", "trigger_delay_ms must be >= 0"}});
    }
    if (step.distance_threshold_cm <= 0) {
      throw CallError(errs::bad_payload, {{"what", "distance_threshold_cm must be > 0"}});
    }
  }
  if (config.reaction.base_ms <= 0 || config.reaction.spread_ms < 0) {
    throw CallError(errs::bad_payload, {{"what", "reaction model must have base_ms > 0"}});
  }
}

std::int64_t RemedesController::start_exercise(std::optional<ExerciseConfig> config) {
  std::int64_t id = 0;
  {
    std::lock_guard lock(mutex_);
    if (current_ != 0 && !exercises_[current_].completed) {
      throw CallError(errs::exercise_in_progress, {{"exercise_id", current_}});
    }
    ExerciseConfig resolved = config.value_or(defaults_);
    if (resolved.pad_count > static_cast<int>(pads_.size())) {
      pads_.resize(static_cast<std::size_t>(resolved.pad_count));
      for (std::size_t i = 0; i < pads_.size(); ++i) pads_[i].pad_id = static_cast<int>(i);
    }
    validate_config_locked(resolved);

    Exercise exercise;
    exercise.id = ++next_exercise_id_;
    exercise.config = std::move(resolved);
    exercise.rng.seed(exercise.config.seed);
    id = exercise.id;
    current_ = exercise.id;
    pending_ = PendingEvent{PendingEvent::What::Activate,
                            now_ms_ + exercise.config.steps[0].trigger_delay_ms, 0};
    exercises_[exercise.id] = std::move(exercise);
    logging::info("remedes.exercise_started", {{"exercise_id", std::to_string(id)}});
  }
  if (auto_run_) run_to_completion();
  return id;
}

ExerciseResult RemedesController::results(std::optional<std::int64_t> exercise_id) const {
  std::lock_guard lock(mutex_);
  if (exercises_.empty()) {
    throw CallError(errs::no_exercises_yet);
  }
  std::int64_t id = exercise_id.value_or(exercises_.rbegin()->first);
  auto it = exercises_.find(id);
  if (it == exercises_.end()) {
    throw CallError(errs::no_such_exercise, {{"exercise_id", id}});
  }
  return snapshot_locked(it->second);
}

ExerciseResult RemedesController::snapshot_locked(const Exercise& exercise) const {
  ExerciseResult result;
  result.exercise_id = exercise.id;
  result.per_step = exercise.per_step;
  result.completed = exercise.completed;
  if (!result.per_step.empty()) {
    double sum = 0;
    double lo = static_cast<double>(result.per_step.front().reaction_ms);
    double hi = lo;
    for (const auto& step : result.per_step) {
      const double r = static_cast<double>(step.reaction_ms);
      sum += r;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    result.mean_ms = sum / static_cast<double>(result.per_step.size());
    result.min_ms = lo;
    result.max_ms = hi;
  }
  return result;
}

void RemedesController::advance(std::int64_t ms) {
  std::lock_guard lock(mutex_);
  const std::int64_t target = now_ms_ + std::max<std::int64_t>(0, ms);
  while (pending_ && pending_->at <= target) {
    now_ms_ = pending_->at;
    process_event_locked();
  }
  now_ms_ = target;
}

void RemedesController::run_to_completion() {
  std::lock_guard lock(mutex_);
  while (pending_) {
    now_ms_ = pending_->at;
    process_event_locked();
  }
}

std::optional<std::int64_t> RemedesController::next_event_in() const {
  std::lock_guard lock(mutex_);
  if (!pending_) return std::nullopt;
  return std::max<std::int64_t>(0, pending_->at - now_ms_);
}

bool RemedesController::running() const {
  std::lock_guard lock(mutex_);
  return pending_.has_value();
}

std::int64_t RemedesController::now_ms() const {
  std::lock_guard lock(mutex_);
  return now_ms_;
}

Pad RemedesController::pad(int pad_id) const {
  std::lock_guard lock(mutex_);
  if (pad_id < 0 || pad_id >= static_cast<int>(pads_.size())) {
    throw CallError(errs::no_such_pad, {{"pad_id", pad_id}});
  }
  return pads_[static_cast<std::size_t>(pad_id)];
}

std::vector<PadInterval> RemedesController::event_log(
    std::optional<std::int64_t> exercise_id) const {
  std::lock_guard lock(mutex_);
  if (exercises_.empty()) throw CallError(errs::no_exercises_yet);
  const std::int64_t id = exercise_id.value_or(exercises_.rbegin()->first);
  auto it = exercises_.find(id);
  if (it == exercises_.end()) throw CallError(errs::no_such_exercise, {{"exercise_id", id}});
  return it->second.intervals;
}

void RemedesController::activate_pad(int pad_id, const PadStep& step) {
  std::lock_guard lock(mutex_);
  activate_locked(pad_id, step);
}

void RemedesController::activate_locked(int pad_id, const PadStep& step) {
  if (pad_id < 0 || pad_id >= static_cast<int>(pads_.size())) {
    throw CallError(errs::no_such_pad, {{"pad_id", pad_id}});
  }
  Pad& pad = pads_[static_cast<std::size_t>(pad_id)];
  if (pad.state == PadState::Active) {
    throw CallError(errs::pad_busy, {{"pad_id", pad_id}});
  }
  // A DONE pad resets on its next activation.
  pad.state = PadState::Active;
  pad.color = step.color;
  pad.distance_threshold_cm = step.distance_threshold_cm;
  pad.activated_at = now_ms_;
  pad.deactivated_at = 0;
}

std::int64_t RemedesController::simulate_reaction(int pad_id) {
  std::lock_guard lock(mutex_);
  if (pad_id < 0 || pad_id >= static_cast<int>(pads_.size())) {
    throw CallError(errs::no_such_pad, {{"pad_id", pad_id}});
  }
  Pad& pad = pads_[static_cast<std::size_t>(pad_id)];
  if (pad.state != PadState::Active) {
    throw CallError(errs::pad_busy, {{"what", "pad is not active"}, {"pad_id", pad_id}});
  }
  const std::int64_t reaction =
      sample_reaction_ms(current_ != 0 ? exercises_[current_].config.reaction
                                       : defaults_.reaction,
                         scratch_rng_);
  pad.state = PadState::Done;
  pad.deactivated_at = pad.activated_at + reaction;
  return reaction;
}

void RemedesController::process_event_locked() {
  Exercise& exercise = exercises_[current_];
  const PendingEvent event = *pending_;
  pending_.reset();
  const PadStep& step = exercise.config.steps[event.step];

  if (event.what == PendingEvent::What::Activate) {
    try {
      activate_locked(step.pad_id, step);
    } catch (const CallError& e) {
      logging::error("remedes.routine_aborted", {{"why", e.reason()}});
      current_ = 0;
      return;  // completed stays false
    }
    const std::int64_t reaction = sample_reaction_ms(exercise.config.reaction, exercise.rng);
    pending_ = PendingEvent{PendingEvent::What::Deactivate, now_ms_ + reaction, event.step};
    return;
  }

  // Deactivation: sonar saw the hand, record the step.
  Pad& pad = pads_[static_cast<std::size_t>(step.pad_id)];
  pad.state = PadState::Done;
  pad.deactivated_at = now_ms_;
  exercise.per_step.push_back({step.pad_id, now_ms_ - pad.activated_at});
  exercise.intervals.push_back({step.pad_id, pad.activated_at, now_ms_});

  const std::size_t next = event.step + 1;
  if (next < exercise.config.steps.size()) {
    exercise.next_step = next;
    pending_ = PendingEvent{PendingEvent::What::Activate,
                            now_ms_ + exercise.config.steps[next].trigger_delay_ms, next};
  } else {
    exercise.completed = true;
    current_ = 0;
    logging::info("remedes.exercise_completed", {{"exercise_id", std::to_string(exercise.id)}});
  }
}

RemedesNode::RemedesNode(std::shared_ptr<PeerConnection> conn,
                         std::shared_ptr<RemedesController> controller)
    : conn_(std::move(conn)), controller_(std::move(controller)) {}

void RemedesNode::start() {
  auto controller = controller_;
  conn_->register_procedure("remedes.exercise.start", [controller](const Payload& args) {
    std::optional<ExerciseConfig> config;
    if (!args.empty()) {
      config = ExerciseConfig::from_payload(controller->defaults(), args);
    }
    const std::int64_t id = controller->start_exercise(config);
    return Payload{{"exercise_id", id}};
  });
  conn_->register_procedure("remedes.exercise.results", [controller](const Payload& args) {
    std::optional<std::int64_t> id;
    if (args.contains("exercise_id")) {
      if (!args["exercise_id"].is_number_integer() && !args["exercise_id"].is_number_unsigned()) {
        throw CallError(errs::bad_payload, {{"what", "exercise_id must be an integer"}});
      }
      id = args["exercise_id"].get<std::int64_t>();
    }
    return controller->results(id).to_payload();
  });
}

}  // namespace iotmesh::sim
