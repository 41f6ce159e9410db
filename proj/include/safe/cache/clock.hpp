#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>

namespace safe::cache {

// Injectable time source; TTL comparisons always use the authorizer's clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(int64_t start = 1'000'000) : now_(start) {}
  int64_t now_ms() override { return now_.load(); }
  void advance(int64_t ms) { now_.fetch_add(ms); }
  void set(int64_t ms) { now_.store(ms); }

 private:
  std::atomic<int64_t> now_;
};

inline std::shared_ptr<Clock> system_clock() {
  return std::make_shared<SystemClock>();
}

}  // namespace safe::cache
