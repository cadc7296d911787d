#include "chardial/clock.hpp"

#include <thread>

namespace chardial {

Clock::time_point SystemClock::now() const {
    return std::chrono::time_point_cast<duration>(std::chrono::system_clock::now());
}

void SystemClock::sleep_for(duration d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
}

Clock::time_point ManualClock::now() const {
    std::lock_guard lock(mutex_);
    return now_;
}

void ManualClock::sleep_for(duration d) {
    std::lock_guard lock(mutex_);
    if (d.count() > 0) {
        now_ += d;
        slept_ += d;
    }
}

void ManualClock::advance(duration d) {
    std::lock_guard lock(mutex_);
    now_ += d;
}

Clock::duration ManualClock::total_slept() const {
    std::lock_guard lock(mutex_);
    return slept_;
}

}  // namespace chardial
