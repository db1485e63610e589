#include "rebot/memory.hpp"

#include <atomic>

namespace rebot::memory {
namespace {

std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};

void raise_peak(std::int64_t candidate) {
  std::int64_t peak = g_peak.load(std::memory_order_relaxed);
  while (candidate > peak &&
         !g_peak.compare_exchange_weak(peak, candidate, std::memory_order_relaxed)) {
  }
}

}  // namespace

Stats stats() {
  return {g_live.load(std::memory_order_relaxed), g_peak.load(std::memory_order_relaxed)};
}

void reset_peak() { g_peak.store(g_live.load(std::memory_order_relaxed)); }

void note_alloc(std::size_t bytes) {
  const auto now = g_live.fetch_add(static_cast<std::int64_t>(bytes),
                                    std::memory_order_relaxed) +
                   static_cast<std::int64_t>(bytes);
  raise_peak(now);
}

void note_free(std::size_t bytes) {
  g_live.fetch_sub(static_cast<std::int64_t>(bytes), std::memory_order_relaxed);
}

}  // namespace rebot::memory
