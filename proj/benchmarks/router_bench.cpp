#include <benchmark/benchmark.h>

#include <atomic>

#include "iotmesh/client.hpp"
#include "iotmesh/router.hpp"

using namespace iotmesh;

namespace {

RouterConfig clinic_config() {
  RouterConfig config;
  config.realms = {"clinic"};
  return config;
}

// Publish fan-out through the loopback transport, N standing subscribers.
void BM_publish_fanout(benchmark::State& state) {
  auto router = Router::create(clinic_config());
  auto publisher = PeerConnection::connect_local(router, "clinic");
  std::atomic<std::uint64_t> delivered{0};
  std::vector<std::shared_ptr<PeerConnection>> subscribers;
  for (int i = 0; i < state.range(0); ++i) {
    auto conn = PeerConnection::connect_local(router, "clinic");
    conn->subscribe("bench.topic",
                    [&delivered](const std::string&, const Payload&) { delivered++; });
    subscribers.push_back(conn);
  }
  const Payload payload{{"mean_ms", 412}};
  for (auto _ : state) {
    publisher->publish("bench.topic", payload);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  for (auto& conn : subscribers) conn->close();
  publisher->close();
}
BENCHMARK(BM_publish_fanout)->Arg(1)->Arg(8)->Arg(64);

// One full CALL -> INVOCATION -> YIELD -> RESULT round trip.
void BM_call_roundtrip(benchmark::State& state) {
  auto router = Router::create(clinic_config());
  auto callee = PeerConnection::connect_local(router, "clinic");
  auto caller = PeerConnection::connect_local(router, "clinic");
  callee->register_procedure("bench.echo", [](const Payload& args) { return args; });
  const Payload payload{{"x", 1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(caller->call("bench.echo", payload));
  }
  caller->close();
  callee->close();
}
BENCHMARK(BM_call_roundtrip);

}  // namespace
