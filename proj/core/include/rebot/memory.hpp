#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

namespace rebot::memory {

struct Stats {
  std::int64_t live_bytes = 0;
  std::int64_t peak_bytes = 0;
};

// Byte counters for all tensor storage allocated through TrackingAllocator.
Stats stats();
// Sets the high-water mark to the current live byte count.
void reset_peak();

void note_alloc(std::size_t bytes);
void note_free(std::size_t bytes);

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    note_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    note_free(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

}  // namespace rebot::memory
