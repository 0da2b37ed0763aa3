#ifndef IOTMESH_TCP_HPP
#define IOTMESH_TCP_HPP

#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "iotmesh/config.hpp"
#include "iotmesh/router.hpp"

namespace iotmesh {

namespace net {

// Returns a connected fd or -1.
int tcp_connect(const std::string& host, std::uint16_t port);
// Returns a listening fd or -1; *bound_port receives the actual port
// (useful with port 0).
int tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t* bound_port);
bool send_all(int fd, std::string_view data);

}  // namespace net

// Newline-delimited frame listener in front of a Router. One reader thread
// per connection.
class TcpServer {
 public:
  TcpServer(std::shared_ptr<Router> router, Endpoint listen);
  ~TcpServer();

  void start();  // throws std::runtime_error when the bind fails
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void serve_connection(int fd);

  std::shared_ptr<Router> router_;
  Endpoint listen_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::set<int> open_fds_;
  bool stopping_ = false;
};

}  // namespace iotmesh

#endif
