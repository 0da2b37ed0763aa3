#ifndef IOTMESH_REMEDES_HPP
#define IOTMESH_REMEDES_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "iotmesh/client.hpp"
#include "iotmesh/value.hpp"

namespace iotmesh::sim {

enum class PadState { Idle, Active, Done };
enum class PadColor { Red, Green, Blue, White };
enum class Stimulus { Visual, Audio };

const char* pad_color_name(PadColor color);
const char* stimulus_name(Stimulus stimulus);

// One Pad: four-color LED plus sonar, as a state machine. Legal transitions
// are IDLE -> ACTIVE -> DONE -> IDLE(reset); timestamps are simulated ms.
struct Pad {
  int pad_id = 0;
  PadState state = PadState::Idle;
  PadColor color = PadColor::Red;
  double distance_threshold_cm = 20.0;
  std::int64_t activated_at = 0;
  std::int64_t deactivated_at = 0;
};

struct PadStep {
  int pad_id = 0;
  PadColor color = PadColor::Red;
  double distance_threshold_cm = 20.0;
  std::int64_t trigger_delay_ms = 500;
};

struct ReactionModel {
  double base_ms = 400.0;
  double spread_ms = 100.0;
};

struct ExerciseConfig {
  std::vector<PadStep> steps;
  Stimulus stimulus = Stimulus::Visual;
  ReactionModel reaction;
  std::uint64_t seed = 1234;
  int pad_count = 4;

  // The shipped "predetermined" exercise: 4 pads, visual, colors cycling
  // R/G/B/W, 20 cm threshold, 500 ms delays.
  static ExerciseConfig defaults();
  // Overlays the payload's fields onto base; throws CallError err.bad_payload.
  static ExerciseConfig from_payload(const ExerciseConfig& base, const Payload& payload);
  static ExerciseConfig from_yaml(const std::filesystem::path& path);
};

struct StepResult {
  int pad_id = 0;
  std::int64_t reaction_ms = 0;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

struct ExerciseResult {
  std::int64_t exercise_id = 0;
  std::vector<StepResult> per_step;
  double mean_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
  bool completed = false;

  Payload to_payload() const;

  friend bool operator==(const ExerciseResult&, const ExerciseResult&) = default;
};

// One pad's ACTIVE interval in simulated ms.
struct PadInterval {
  int pad_id = 0;
  std::int64_t activated_at = 0;
  std::int64_t deactivated_at = 0;
};

inline constexpr std::int64_t kReactionFloorMs = 80;

// max(80, round(base + spread * u)), u uniform in [-1, 1]. The generator is
// consumed via its raw 64-bit output so sequences are identical across
// standard library implementations.
std::int64_t sample_reaction_ms(const ReactionModel& model, std::mt19937_64& rng);

// Master controller: runs routines strictly sequentially on a simulated
// clock. With auto_run the whole routine completes inside start_exercise;
// otherwise the owner advances simulated time explicitly (or a wall-clock
// driver does). Errors are CallError with err.* reasons.
class RemedesController {
 public:
  explicit RemedesController(ExerciseConfig defaults = ExerciseConfig::defaults(),
                             bool auto_run = true);

  // Returns the fresh exercise id. err.exercise_in_progress while one runs.
  std::int64_t start_exercise(std::optional<ExerciseConfig> config = std::nullopt);
  // Latest exercise when id is absent. err.no_such_exercise /
  // err.no_exercises_yet. An unfinished exercise reports completed=false
  // with the steps recorded so far.
  ExerciseResult results(std::optional<std::int64_t> exercise_id = std::nullopt) const;

  void advance(std::int64_t ms);
  void run_to_completion();
  // Simulated ms until the next scheduled transition, if any.
  std::optional<std::int64_t> next_event_in() const;

  bool running() const;
  std::int64_t now_ms() const;
  Pad pad(int pad_id) const;  // err.no_such_pad
  std::vector<PadInterval> event_log(std::optional<std::int64_t> exercise_id = std::nullopt) const;
  const ExerciseConfig& defaults() const { return defaults_; }

  // Manual pad operations (the routine uses the same transitions).
  void activate_pad(int pad_id, const PadStep& step);  // err.pad_busy / err.no_such_pad
  std::int64_t simulate_reaction(int pad_id);          // pad must be ACTIVE

 private:
  struct Exercise {
    std::int64_t id = 0;
    ExerciseConfig config;
    std::vector<StepResult> per_step;
    std::vector<PadInterval> intervals;
    bool completed = false;
    std::size_t next_step = 0;
    std::mt19937_64 rng;
  };
  struct PendingEvent {
    enum class What { Activate, Deactivate } what = What::Activate;
    std::int64_t at = 0;
    std::size_t step = 0;
  };

  void validate_config_locked(const ExerciseConfig& config) const;
  void process_event_locked();
  void activate_locked(int pad_id, const PadStep& step);
  ExerciseResult snapshot_locked(const Exercise& exercise) const;

  mutable std::mutex mutex_;
  ExerciseConfig defaults_;
  bool auto_run_;
  std::vector<Pad> pads_;
  std::map<std::int64_t, Exercise> exercises_;
  std::int64_t current_ = 0;  // 0 = none running
  std::int64_t next_exercise_id_ = 0;
  std::int64_t now_ms_ = 0;
  std::optional<PendingEvent> pending_;
  std::mt19937_64 scratch_rng_{0xfeed};  // manual simulate_reaction only
};

// Bus-facing surface: remedes.exercise.start / remedes.exercise.results.
class RemedesNode {
 public:
  RemedesNode(std::shared_ptr<PeerConnection> conn, std::shared_ptr<RemedesController> controller);

  void start();
  RemedesController& controller() { return *controller_; }

 private:
  std::shared_ptr<PeerConnection> conn_;
  std::shared_ptr<RemedesController> controller_;
};

}  // namespace iotmesh::sim

#endif
