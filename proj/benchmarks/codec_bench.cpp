#include <benchmark/benchmark.h>

#include "iotmesh/protocol.hpp"

using namespace iotmesh;

namespace {

Message sample_publish() {
  return Message::publish(7, "remedes.results",
                          {{"mean_ms", 412.5},
                           {"min_ms", 311},
                           {"max_ms", 502},
                           {"completed", true},
                           {"per_step", Json::array({Json{{"pad_id", 0}, {"reaction_ms", 401}},
                                                     Json{{"pad_id", 1}, {"reaction_ms", 377}}})}});
}

void BM_encode(benchmark::State& state) {
  const Message msg = sample_publish();
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(msg));
  }
}
BENCHMARK(BM_encode);

void BM_decode(benchmark::State& state) {
  const std::string frame = encode(sample_publish());
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode(frame));
  }
}
BENCHMARK(BM_decode);

void BM_roundtrip_small(benchmark::State& state) {
  const Message msg = Message::call(12, "rpi.reminder", {{"text", "Remind me to stretch"}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode(encode(msg)));
  }
}
BENCHMARK(BM_roundtrip_small);

}  // namespace
