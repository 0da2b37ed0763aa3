#include "iotmesh/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

#include "iotmesh/logging.hpp"

namespace iotmesh {

namespace net {

int tcp_connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd >= 0) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  return fd;
}

int tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t* bound_port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 64) != 0) {
    ::close(fd);
    return -1;
  }
  if (bound_port != nullptr) {
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    if (getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len) == 0) {
      *bound_port = ntohs(actual.sin_port);
    }
  }
  return fd;
}

bool send_all(int fd, std::string_view data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace net

namespace {

class TcpLink : public PeerLink {
 public:
  explicit TcpLink(int fd) : fd_(fd) {}

  void send_frame(const std::string& frame) override {
    std::lock_guard lock(mutex_);
    net::send_all(fd_, frame);
  }

  void close_link() override { ::shutdown(fd_, SHUT_RDWR); }

  std::string describe() const override { return "tcp fd=" + std::to_string(fd_); }

 private:
  int fd_;
  std::mutex mutex_;
};

}  // namespace

TcpServer::TcpServer(std::shared_ptr<Router> router, Endpoint listen)
    : router_(std::move(router)), listen_(std::move(listen)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
  listen_fd_ = net::tcp_listen(listen_.host, listen_.port, &port_);
  if (listen_fd_ < 0) {
    throw std::runtime_error("cannot listen on " + listen_.host + ":" +
                             std::to_string(listen_.port));
  }
  logging::info("router.listening", {{"host", listen_.host}, {"port", std::to_string(port_)}});
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void TcpServer::accept_loop() {
  while (true) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    open_fds_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void TcpServer::serve_connection(int fd) {
  auto session = router_->attach(std::make_shared<TcpLink>(fd));
  std::string pending;
  char buf[4096];
  while (true) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t pos = 0;
    while ((pos = pending.find('\n')) != std::string::npos) {
      const std::string line = pending.substr(0, pos);
      pending.erase(0, pos + 1);
      try {
        session->deliver(line);
      } catch (const std::exception& e) {
        logging::warn("router.connection_fault", {{"what", e.what()}});
        ::shutdown(fd, SHUT_RDWR);
      }
    }
  }
  session->transport_closed();
  ::close(fd);
  std::lock_guard lock(mutex_);
  open_fds_.erase(fd);
}

}  // namespace iotmesh
