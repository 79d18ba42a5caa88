#pragma once

/*!
 * \file runtime.hpp
 * \brief Thread substrate: active waiting, core pinning, freeze/thaw latches.
 *
 * Everything that talks to the host scheduler lives here. The spin phase of
 * the backoff touches only user-space state; yields and parks are the only
 * scheduler calls made by accelerator threads while Running.
 *
 * Environment (read once, on first use):
 *   SPAREFLOW_SPIN_BUDGET  default spin iterations before yielding (1000)
 *   SPAREFLOW_NO_PIN       when set to a non-empty value other than "0",
 *                          accelerator threads are left unpinned
 */

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace spareflow {

struct BackoffPolicy {
    std::uint32_t spin_budget = 1000;
    std::uint32_t yield_budget = 64;
    bool park_after = false;
};

enum class WaitAction { spin, yield, park };

// Pure: which action the attempt-th consecutive failed poll should take.
WaitAction backoff_action(const BackoffPolicy& policy, std::uint64_t attempt) noexcept;

// Stateful helper for a polling loop: call pause() after every failed poll
// and reset() after every success.
class Backoff {
public:
    explicit Backoff(BackoffPolicy policy) noexcept : policy_(policy) {}

    void pause() noexcept;
    void reset() noexcept { attempt_ = 0; }
    std::uint64_t attempts() const noexcept { return attempt_; }

private:
    BackoffPolicy policy_;
    std::uint64_t attempt_ = 0;
};

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield" ::: "memory");
#endif
}

struct RuntimeEnv {
    std::uint32_t spin_budget = 1000;
    bool pinning_enabled = true;
};

const RuntimeEnv& runtime_env();
RuntimeEnv parse_runtime_env(const char* spin_budget, const char* no_pin);

// Default backoff for Running accelerator threads (never parks).
BackoffPolicy default_backoff();

unsigned logical_core_count();
// Distinct (package, core) pairs; falls back to the logical count.
unsigned physical_core_count();
// One logical core id per physical core, in ascending order.
std::vector<unsigned> distinct_physical_cores();

struct CoreMap {
    std::vector<std::optional<unsigned>> assignments;  // one per plan thread
    unsigned topology = 1;
};

// Explicit core lists wrap modulo their length; ids must be < topology.
// Without a list, threads take distinct cores in index order, starting at
// core 1 when there are more cores than threads, wrapping otherwise.
CoreMap make_core_map(std::size_t n_threads, std::span<const unsigned> cores, unsigned topology,
                      bool pinning_enabled = true);

class PinnedThread {
public:
    PinnedThread() = default;
    PinnedThread(PinnedThread&&) noexcept = default;
    PinnedThread& operator=(PinnedThread&&) noexcept = default;
    ~PinnedThread();

    bool joinable() const noexcept { return thread_.joinable(); }
    void join();

    std::optional<unsigned> core() const noexcept { return core_; }
    const std::optional<std::string>& warning() const noexcept { return warning_; }

    // CPU time consumed so far by this thread (zero if unavailable).
    std::chrono::nanoseconds cpu_time() const;

private:
    friend PinnedThread spawn_pinned(std::function<void()>, std::optional<unsigned>);

    std::thread thread_;
    std::optional<unsigned> core_;
    std::optional<std::string> warning_;
};

// Starts body on a new thread, bound to core when given. Pinning failures
// leave the thread unpinned and are reported through warning().
PinnedThread spawn_pinned(std::function<void()> body, std::optional<unsigned> core);

std::vector<unsigned> current_thread_affinity();

// Parking point for one accelerator thread. The owning thread blocks in
// freeze_point() until a controller calls thaw().
class FreezeLatch {
public:
    void freeze_point();

    bool is_frozen() const;
    bool wait_frozen_for(std::chrono::milliseconds timeout) const;

    // Resumes the parked thread; false when nothing was parked.
    bool thaw();

    std::uint64_t completed_cycles() const;

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    bool frozen_ = false;
    std::uint64_t generation_ = 0;
};

// Returns the number of threads resumed.
std::size_t thaw_all(std::span<FreezeLatch* const> latches);

}  // namespace spareflow
