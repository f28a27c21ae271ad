#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace a2p2 {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// "2022-01-10T09:00:00.000Z"
std::string format_iso8601(Timestamp ts);
// Accepts a trailing 'Z' or a +hh:mm / -hh:mm offset; milliseconds optional.
Timestamp parse_iso8601(std::string_view text);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
};

// Virtual time for headless runs; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start) : now_(start.time_since_epoch().count()) {}

  Timestamp now() override { return Timestamp(std::chrono::milliseconds(now_.load())); }
  void advance(std::chrono::milliseconds by) { now_ += by.count(); }
  void set(Timestamp ts) { now_ = ts.time_since_epoch().count(); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace a2p2
