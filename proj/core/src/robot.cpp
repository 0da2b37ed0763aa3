#include "iotmesh/robot.hpp"

#include "iotmesh/errors.hpp"

namespace iotmesh::sim {

Payload AudioPayload::to_payload() const {
  return Payload{{"transcript", transcript}, {"duration_s", duration_s}, {"source", source}};
}

std::optional<AudioPayload> AudioPayload::from_payload(const Payload& payload) {
  if (!payload.is_object() || !payload.contains("transcript") ||
      !payload["transcript"].is_string()) {
    return std::nullopt;
  }
  AudioPayload audio;
  audio.transcript = payload["transcript"].get<std::string>();
  if (payload.contains("duration_s")) {
    if (!payload["duration_s"].is_number()) return std::nullopt;
    audio.duration_s = payload["duration_s"].get<double>();
    if (audio.duration_s < 0) return std::nullopt;
  }
  if (payload.contains("source") && payload["source"].is_string()) {
    audio.source = payload["source"].get<std::string>();
  }
  return audio;
}

RobotSim::RobotSim(std::function<std::string()> now_fn) : now_fn_(std::move(now_fn)) {}

Payload RobotSim::speak(const Payload& args) {
  if (!args.contains("text") || !args["text"].is_string() ||
      args["text"].get<std::string>().empty()) {
    throw CallError(errs::bad_payload, {{"what", "speak requires non-empty text"}});
  }
  std::lock_guard lock(mutex_);
  log_.push_back({args["text"].get<std::string>(), now_fn_()});
  return Payload{{"spoken", true}};
}

Payload RobotSim::record(const Payload& args) {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) {
    throw CallError(errs::no_utterance, {{"what", "no scripted utterance queued"}});
  }
  AudioPayload audio = queue_.front();
  queue_.pop_front();
  if (args.contains("duration_s") && args["duration_s"].is_number()) {
    audio.duration_s = args["duration_s"].get<double>();
  }
  return audio.to_payload();
}

Payload RobotSim::enqueue(const Payload& args) {
  if (!args.contains("text") || !args["text"].is_string()) {
    throw CallError(errs::bad_payload, {{"what", "enqueue requires a text field"}});
  }
  std::lock_guard lock(mutex_);
  queue_.push_back(AudioPayload{args["text"].get<std::string>()});
  return Payload{{"queued", true}, {"depth", queue_.size()}};
}

void RobotSim::enqueue_utterance(const std::string& text) {
  std::lock_guard lock(mutex_);
  queue_.push_back(AudioPayload{text});
}

std::vector<SpeechEntry> RobotSim::speech_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

bool RobotSim::speech_contains(const std::string& substring) const {
  std::lock_guard lock(mutex_);
  for (const auto& entry : log_) {
    if (entry.text.find(substring) != std::string::npos) return true;
  }
  return false;
}

std::size_t RobotSim::queue_depth() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

RobotNode::RobotNode(std::shared_ptr<PeerConnection> conn, std::shared_ptr<RobotSim> robot)
    : conn_(std::move(conn)), robot_(std::move(robot)) {}

void RobotNode::start() {
  auto robot = robot_;
  conn_->register_procedure("nao.speak",
                            [robot](const Payload& args) { return robot->speak(args); });
  conn_->register_procedure("nao.record",
                            [robot](const Payload& args) { return robot->record(args); });
  conn_->register_procedure("nao.sim.enqueue",
                            [robot](const Payload& args) { return robot->enqueue(args); });
}

}  // namespace iotmesh::sim
