#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace lseq {

/// Millisecond time source. Must never go backwards.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

/// Wall time in milliseconds since the clock was created.
class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

  std::int64_t now_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 origin_)
        .count();
  }

  std::chrono::steady_clock::time_point to_time_point(std::int64_t ms) const {
    return origin_ + std::chrono::milliseconds(ms);
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Manually driven clock for tests and deterministic headless runs.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(std::int64_t start = 0) : now_(start) {}

  std::int64_t now_ms() const override { return now_.load(); }

  void advance(std::int64_t ms) {
    if (ms > 0) now_ += ms;
  }
  /// Moves to `ms` if it lies in the future; never rewinds.
  void advance_to(std::int64_t ms) {
    std::int64_t cur = now_.load();
    while (ms > cur && !now_.compare_exchange_weak(cur, ms)) {
    }
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace lseq
