#include "iotmesh/services.hpp"

#include "iotmesh/errors.hpp"

namespace iotmesh::sim {

ServicesNode::ServicesNode(std::shared_ptr<PeerConnection> conn, std::function<DateTime()> now_fn)
    : conn_(std::move(conn)), now_fn_(std::move(now_fn)) {}

void ServicesNode::start() {
  conn_->register_procedure("rpi.speech_recognition",
                            [](const Payload& args) { return sr_transcribe(args); });
  conn_->register_procedure("rpi.reminder",
                            [this](const Payload& args) { return reminder_service(args); });
}

Payload ServicesNode::sr_transcribe(const Payload& audio) {
  if (!audio.contains("transcript") || !audio["transcript"].is_string()) {
    throw CallError(errs::bad_payload, {{"what", "audio payload has no transcript"}});
  }
  return Payload{{"text", audio["transcript"].get<std::string>()}};
}

Payload ServicesNode::reminder_service(const Payload& args) const {
  if (!args.contains("text") || !args["text"].is_string()) {
    throw CallError(errs::bad_payload, {{"what", "reminder service requires a text field"}});
  }
  nlp::ReferenceClock ref{now_fn_()};
  if (args.contains("now")) {
    if (!args["now"].is_string()) {
      throw CallError(errs::bad_payload, {{"what", "now must be an ISO8601 string"}});
    }
    auto parsed = DateTime::from_iso(args["now"].get<std::string>());
    if (!parsed) {
      throw CallError(errs::bad_payload, {{"what", "cannot parse now as ISO8601"}});
    }
    ref.now = *parsed;
  }
  Json extractions = Json::array();
  for (const auto& extraction : nlp::parse_reminders(args["text"].get<std::string>(), ref)) {
    extractions.push_back(extraction.to_payload());
  }
  return Payload{{"extractions", std::move(extractions)}};
}

}  // namespace iotmesh::sim
