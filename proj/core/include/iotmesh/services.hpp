#ifndef IOTMESH_SERVICES_HPP
#define IOTMESH_SERVICES_HPP

#include <functional>
#include <memory>
#include <string>

#include "iotmesh/client.hpp"
#include "iotmesh/datetime.hpp"
#include "iotmesh/reminder_nlp.hpp"

namespace iotmesh::sim {

// The hardware-node stand-in: registers the robotic web services the
// calendar application uses (rpi.speech_recognition, rpi.reminder). The
// speech recognizer is a perfect-recognition stub over simulated audio.
class ServicesNode {
 public:
  explicit ServicesNode(std::shared_ptr<PeerConnection> conn,
                        std::function<DateTime()> now_fn = wall_now);

  void start();

  // {transcript, ...} -> {text: transcript}; err.bad_payload when missing.
  static Payload sr_transcribe(const Payload& audio);
  // {text, now?} -> {extractions: [...]}; "now" is ISO8601 and defaults to
  // the node clock.
  Payload reminder_service(const Payload& args) const;

 private:
  std::shared_ptr<PeerConnection> conn_;
  std::function<DateTime()> now_fn_;
};

}  // namespace iotmesh::sim

#endif
