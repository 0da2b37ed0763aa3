#ifndef IOTMESH_TESTS_CAPTURE_LINK_HPP
#define IOTMESH_TESTS_CAPTURE_LINK_HPP

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <vector>

#include "iotmesh/protocol.hpp"
#include "iotmesh/transport.hpp"

namespace testsupport {

// PeerLink that records everything the router sends, for raw-frame tests.
class CaptureLink : public iotmesh::PeerLink {
 public:
  void send_frame(const std::string& frame) override {
    std::lock_guard lock(mutex_);
    frames_.push_back(frame);
    messages_.push_back(iotmesh::decode(frame));
    ready_.notify_all();
  }

  void close_link() override {
    std::lock_guard lock(mutex_);
    closed_ = true;
    ready_.notify_all();
  }

  std::string describe() const override { return "capture"; }

  bool wait_for_messages(std::size_t n,
                         std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
    std::unique_lock lock(mutex_);
    return ready_.wait_for(lock, timeout, [&] { return messages_.size() >= n; });
  }

  std::vector<iotmesh::Message> messages() const {
    std::lock_guard lock(mutex_);
    return messages_;
  }

  bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::vector<std::string> frames_;
  std::vector<iotmesh::Message> messages_;
  bool closed_ = false;
};

}  // namespace testsupport

#endif
