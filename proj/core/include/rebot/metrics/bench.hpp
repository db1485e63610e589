#pragma once

#include <cstdint>
#include <string>

#include "rebot/model/rebotnet.hpp"

namespace rebot {

struct BenchResult {
  double latency_ms = 0;  // mean wall time of one forward over a frame pair
  double fps = 0;         // 1000 / latency_ms
  std::int64_t peak_mem_bytes = 0;
  int warmup = 0;
  int reps = 0;
};

// Untimed warmup forwards, then `reps` timed forwards at the model's
// resolution on one thread. Peak memory is the tensor allocator high-water
// mark during the run.
BenchResult bench_latency(const ReBotNet<float>& model, int warmup = 10, int reps = 1000,
                          std::uint64_t seed = 0);

// "latency_ms=... fps=... peak_mem=..."
std::string to_kv(const BenchResult& result);

}  // namespace rebot
