#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>

namespace spareflow::bench {

// Bounded mutex + condition-variable queue; baseline for the SPSC
// throughput comparison.
template <typename T>
class LockedQueue {
public:
    explicit LockedQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(const T& value) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_; });
        items_.push_back(value);
        lock.unlock();
        not_empty_.notify_one();
    }

    T pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return !items_.empty(); });
        T value = items_.front();
        items_.pop_front();
        lock.unlock();
        not_full_.notify_one();
        return value;
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
};

}  // namespace spareflow::bench
