#pragma once

/*!
 * \file spsc.hpp
 * \brief Bounded lock-free single-producer/single-consumer queue.
 *
 * The producer only ever reads and writes the tail index (pwrite) and the
 * consumer only the head index (pread). Fullness and emptiness are decided
 * per slot by an occupancy tag stored next to the payload, so the two
 * indices never share a cache line and are never read by the peer.
 *
 * Publication protocol (no read-modify-write instructions):
 *   push: load tag (acquire) == empty -> write value -> store tag full (release)
 *   pop:  load tag (acquire) == full  -> read value  -> store tag empty (release)
 */

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <type_traits>

namespace spareflow {

inline constexpr std::size_t kCacheLine = 64;

template <typename T, std::size_t CacheLine = kCacheLine>
class SpscQueue {
    static_assert(std::is_trivially_copyable_v<T>, "payload must be a trivially copyable token");
    static_assert(CacheLine >= sizeof(std::size_t) && (CacheLine & (CacheLine - 1)) == 0,
                  "cache line size must be a power of two");

    struct Slot {
        T value{};
        std::atomic<bool> occupied{false};
    };

public:
    explicit SpscQueue(std::size_t capacity) : size_(capacity) {
        if (capacity <= 1) {
            throw std::invalid_argument("SpscQueue capacity must be greater than 1");
        }
        buf_ = std::make_unique<Slot[]>(capacity);
    }

    SpscQueue(const SpscQueue&) = delete;
    SpscQueue& operator=(const SpscQueue&) = delete;

    // Producer only.
    bool push(const T& value) noexcept {
        Slot& slot = buf_[pwrite_];
        if (slot.occupied.load(std::memory_order_acquire)) {
            return false;
        }
        slot.value = value;
        slot.occupied.store(true, std::memory_order_release);
        pwrite_ = advance(pwrite_);
        ++pushed_;
        assert(pwrite_ < size_);
        return true;
    }

    // Consumer only.
    std::optional<T> pop() noexcept {
        Slot& slot = buf_[pread_];
        if (!slot.occupied.load(std::memory_order_acquire)) {
            return std::nullopt;
        }
        T value = slot.value;
        slot.occupied.store(false, std::memory_order_release);
        pread_ = advance(pread_);
        // single writer: a plain load/store pair, not an atomic increment
        popped_.store(popped_.load(std::memory_order_relaxed) + 1, std::memory_order_relaxed);
        assert(pread_ < size_);
        return value;
    }

    // Consumer only: true if pop() would currently succeed.
    bool ready() const noexcept { return buf_[pread_].occupied.load(std::memory_order_acquire); }

    std::size_t capacity() const noexcept { return size_; }

    // Producer-side estimate of free slots. Exact when the consumer is quiescent,
    // otherwise a lower bound.
    std::size_t approx_free() const noexcept {
        const std::uint64_t in_flight = pushed_ - popped_.load(std::memory_order_relaxed);
        return in_flight >= size_ ? 0 : size_ - static_cast<std::size_t>(in_flight);
    }

    // Diagnostic; both endpoints must be quiescent.
    std::size_t unsafe_len() const noexcept {
        std::size_t n = 0;
        for (std::size_t i = 0; i < size_; ++i) {
            n += buf_[i].occupied.load(std::memory_order_acquire) ? 1 : 0;
        }
        return n;
    }

    std::size_t unsafe_read_index() const noexcept { return pread_; }
    std::size_t unsafe_write_index() const noexcept { return pwrite_; }

private:
    std::size_t advance(std::size_t idx) const noexcept {
        return idx + ((idx + 1 >= size_) ? (1 - size_) : 1);
    }

    const std::size_t size_;
    std::unique_ptr<Slot[]> buf_;

    alignas(CacheLine) std::size_t pwrite_ = 0;
    std::uint64_t pushed_ = 0;

    alignas(CacheLine) std::size_t pread_ = 0;
    std::atomic<std::uint64_t> popped_{0};

    char pad_[CacheLine - sizeof(std::size_t) - sizeof(std::atomic<std::uint64_t>)]{};
};

}  // namespace spareflow
