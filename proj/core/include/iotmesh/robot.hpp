#ifndef IOTMESH_ROBOT_HPP
#define IOTMESH_ROBOT_HPP

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "iotmesh/client.hpp"
#include "iotmesh/datetime.hpp"
#include "iotmesh/value.hpp"

namespace iotmesh::sim {

// Simulated sound file: carries its own transcript instead of samples.
struct AudioPayload {
  std::string transcript;
  double duration_s = 0.0;
  std::string source = "nao.mic.sim";

  Payload to_payload() const;
  static std::optional<AudioPayload> from_payload(const Payload& payload);

  friend bool operator==(const AudioPayload&, const AudioPayload&) = default;
};

struct SpeechEntry {
  std::string text;
  std::string at;  // ISO8601
};

// The robot's resource layer: a speech device that logs what it says and a
// microphone fed from a scripted utterance queue. The speech log is the
// observable for end-to-end assertions.
class RobotSim {
 public:
  explicit RobotSim(std::function<std::string()> now_fn = iso8601_utc_now);

  // {text} -> {spoken:true}; err.bad_payload on missing/empty text.
  Payload speak(const Payload& args);
  // -> audio payload from the queue head; err.no_utterance when empty.
  // duration_s from the request overrides the queued value.
  Payload record(const Payload& args);
  // {text} -> {queued:true, depth:n}
  Payload enqueue(const Payload& args);

  void enqueue_utterance(const std::string& text);
  std::vector<SpeechEntry> speech_log() const;
  bool speech_contains(const std::string& substring) const;
  std::size_t queue_depth() const;

 private:
  mutable std::mutex mutex_;
  std::vector<SpeechEntry> log_;
  std::deque<AudioPayload> queue_;
  std::function<std::string()> now_fn_;
};

// Bus-facing surface of the robot: nao.speak, nao.record and the
// simulation-only nao.sim.enqueue.
class RobotNode {
 public:
  RobotNode(std::shared_ptr<PeerConnection> conn, std::shared_ptr<RobotSim> robot);

  void start();
  RobotSim& robot() { return *robot_; }

 private:
  std::shared_ptr<PeerConnection> conn_;
  std::shared_ptr<RobotSim> robot_;
};

}  // namespace iotmesh::sim

#endif
