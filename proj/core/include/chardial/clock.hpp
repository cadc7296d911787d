#pragma once

#include <chrono>
#include <mutex>

namespace chardial {

class Clock {
  public:
    using duration = std::chrono::milliseconds;
    using time_point = std::chrono::time_point<std::chrono::system_clock, duration>;

    virtual ~Clock() = default;
    virtual time_point now() const = 0;
    virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
  public:
    time_point now() const override;
    void sleep_for(duration d) override;
};

/// Virtual time for tests: sleeping advances the clock instantly.
class ManualClock final : public Clock {
  public:
    explicit ManualClock(time_point start = time_point{duration{1'700'000'000'000}}) : now_(start) {}

    time_point now() const override;
    void sleep_for(duration d) override;
    void advance(duration d);
    duration total_slept() const;

  private:
    mutable std::mutex mutex_;
    time_point now_;
    duration slept_{0};
};

}  // namespace chardial
