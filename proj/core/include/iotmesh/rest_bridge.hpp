#ifndef IOTMESH_REST_BRIDGE_HPP
#define IOTMESH_REST_BRIDGE_HPP

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "iotmesh/client.hpp"
#include "iotmesh/config.hpp"
#include "iotmesh/router.hpp"

namespace httplib {
class Server;
}

namespace iotmesh {

// One HTTP route exposed by the bridge; drives the served API description.
// Requests for /call/<segments> and /publish/<segments> are accepted whether
// or not a matching route is listed -- the table documents the surface.
struct BridgeRoute {
  enum class Interaction { Call, Publish };

  std::string method;  // "get" | "post"
  std::string path;    // "/call/nao/speak"
  Interaction interaction = Interaction::Call;
  std::string target_uri;  // "nao.speak"
  std::string summary;
};

// HTTP facade on the router: /call/* issues CALLs, /publish/* issues
// PUBLISHes, /openapi serves the generated API description. All bus traffic
// goes through one long-lived internal router session.
class RestBridge {
 public:
  RestBridge(std::shared_ptr<Router> router, std::string realm, Endpoint listen);
  ~RestBridge();

  void start();  // throws std::runtime_error when the bind fails
  void stop();

  std::uint16_t port() const { return port_; }

  void add_route(BridgeRoute route);
  std::vector<BridgeRoute> routes() const;
  Json openapi_document() const;

  // Total mapping of ERROR reason uris to HTTP statuses (docs/protocol.md).
  static int status_for_error(const std::string& reason);

  // Path "/a/b/c" (or "a/b/c") -> "a.b.c".
  static std::string path_to_uri(const std::string& path);

 private:
  void install_handlers();
  void rebuild_document_locked();

  std::shared_ptr<Router> router_;
  std::string realm_;
  Endpoint listen_;
  std::uint16_t port_ = 0;
  std::shared_ptr<PeerConnection> session_;
  std::unique_ptr<httplib::Server> server_;
  std::thread serve_thread_;
  mutable std::mutex mutex_;
  std::vector<BridgeRoute> routes_;
  Json document_;
};

// The routes the stock desk-scale deployment serves.
std::vector<BridgeRoute> default_bridge_routes();

}  // namespace iotmesh

#endif
