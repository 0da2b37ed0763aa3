#ifndef IOTMESH_TRANSPORT_HPP
#define IOTMESH_TRANSPORT_HPP

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

namespace iotmesh {

// Router-side handle for pushing encoded frames to one connected peer.
// Implementations: LoopbackLink (in-process) and TcpLink.
class PeerLink {
 public:
  virtual ~PeerLink() = default;
  virtual void send_frame(const std::string& frame) = 0;
  virtual void close_link() = 0;
  virtual std::string describe() const = 0;
};

// Closable FIFO of frames. push() after close() is dropped; pop() drains
// whatever was queued before the close, then reports the closed state.
class FrameQueue {
 public:
  void push(std::string frame) {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    frames_.push_back(std::move(frame));
    ready_.notify_one();
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    ready_.notify_all();
  }

  // Blocks until a frame or close; nullopt means closed-and-drained.
  std::optional<std::string> pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return closed_ || !frames_.empty(); });
    if (frames_.empty()) return std::nullopt;
    std::string frame = std::move(frames_.front());
    frames_.pop_front();
    return frame;
  }

  bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> frames_;
  bool closed_ = false;
};

}  // namespace iotmesh

#endif
