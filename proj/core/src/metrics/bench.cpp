#include "rebot/metrics/bench.hpp"

#include <chrono>
#include <cstdio>

#include "rebot/errors.hpp"
#include "rebot/memory.hpp"
#include "rebot/rng.hpp"
#include "rebot/tape.hpp"

namespace rebot {

BenchResult bench_latency(const ReBotNet<float>& model, int warmup, int reps, std::uint64_t seed) {
  if (warmup < 0 || reps < 1) throw UsageError("bench: need warmup >= 0 and reps >= 1");
  const auto& cfg = model.config();
  Rng rng(seed);
  Tensor prev({1, 3, cfg.height, cfg.width}), cur({1, 3, cfg.height, cfg.width});
  for (auto& v : prev.data()) v = static_cast<float>(rng.uniform());
  for (auto& v : cur.data()) v = static_cast<float>(rng.uniform());

  NoGradScope<float> no_grad;
  memory::reset_peak();
  for (int i = 0; i < warmup; ++i) model.forward(prev, cur);

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  for (int i = 0; i < reps; ++i) model.forward(prev, cur);
  const std::chrono::duration<double, std::milli> elapsed = Clock::now() - start;

  BenchResult r;
  r.warmup = warmup;
  r.reps = reps;
  r.latency_ms = elapsed.count() / reps;
  r.fps = 1000.0 / r.latency_ms;
  r.peak_mem_bytes = memory::stats().peak_bytes;
  return r;
}

std::string to_kv(const BenchResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "latency_ms=%.6f fps=%.6f peak_mem=%lld", r.latency_ms, r.fps,
                static_cast<long long>(r.peak_mem_bytes));
  return buf;
}

}  // namespace rebot
