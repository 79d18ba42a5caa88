#include "spareflow/runtime.hpp"

#include "spareflow/errors.hpp"

#include <pthread.h>
#include <sched.h>
#include <unistd.h>

#include <charconv>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <string_view>
#include <utility>

namespace spareflow {

WaitAction backoff_action(const BackoffPolicy& policy, std::uint64_t attempt) noexcept {
    if (attempt < policy.spin_budget) {
        return WaitAction::spin;
    }
    if (attempt < std::uint64_t{policy.spin_budget} + policy.yield_budget) {
        return WaitAction::yield;
    }
    return policy.park_after ? WaitAction::park : WaitAction::yield;
}

void Backoff::pause() noexcept {
    switch (backoff_action(policy_, attempt_++)) {
    case WaitAction::spin:
        cpu_relax();
        break;
    case WaitAction::yield:
        std::this_thread::yield();
        break;
    case WaitAction::park:
        std::this_thread::sleep_for(std::chrono::microseconds(50));
        break;
    }
}

RuntimeEnv parse_runtime_env(const char* spin_budget, const char* no_pin) {
    RuntimeEnv env;
    if (spin_budget != nullptr) {
        std::string_view s(spin_budget);
        std::uint32_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec == std::errc() && ptr == s.data() + s.size()) {
            env.spin_budget = value;
        }
    }
    if (no_pin != nullptr) {
        std::string_view s(no_pin);
        env.pinning_enabled = s.empty() || s == "0";
    }
    return env;
}

const RuntimeEnv& runtime_env() {
    static const RuntimeEnv env =
        parse_runtime_env(std::getenv("SPAREFLOW_SPIN_BUDGET"), std::getenv("SPAREFLOW_NO_PIN"));
    return env;
}

BackoffPolicy default_backoff() {
    BackoffPolicy p;
    p.spin_budget = runtime_env().spin_budget;
    return p;
}

unsigned logical_core_count() {
    const long n = ::sysconf(_SC_NPROCESSORS_ONLN);
    if (n > 0) {
        return static_cast<unsigned>(n);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

std::vector<unsigned> distinct_physical_cores() {
    const unsigned logical = logical_core_count();
    std::set<std::pair<int, int>> seen;
    std::vector<unsigned> out;
    for (unsigned cpu = 0; cpu < logical; ++cpu) {
        const std::string base = "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology/";
        std::ifstream core_file(base + "core_id");
        std::ifstream pkg_file(base + "physical_package_id");
        int core = -1;
        int pkg = -1;
        if (!(core_file >> core) || !(pkg_file >> pkg)) {
            // no topology information: treat every logical core as physical
            out.clear();
            for (unsigned c = 0; c < logical; ++c) {
                out.push_back(c);
            }
            return out;
        }
        if (seen.emplace(pkg, core).second) {
            out.push_back(cpu);
        }
    }
    return out;
}

unsigned physical_core_count() {
    const auto cores = distinct_physical_cores();
    return cores.empty() ? 1 : static_cast<unsigned>(cores.size());
}

CoreMap make_core_map(std::size_t n_threads, std::span<const unsigned> cores, unsigned topology,
                      bool pinning_enabled) {
    CoreMap map;
    map.topology = topology == 0 ? 1 : topology;
    for (unsigned c : cores) {
        if (c >= map.topology) {
            throw ConfigError("core " + std::to_string(c) + " does not exist (host has " +
                              std::to_string(map.topology) + " logical cores)");
        }
    }
    map.assignments.resize(n_threads);
    if (!pinning_enabled) {
        return map;
    }
    if (!cores.empty()) {
        for (std::size_t i = 0; i < n_threads; ++i) {
            map.assignments[i] = cores[i % cores.size()];
        }
        return map;
    }
    // leave core 0 to the host thread when there is room for it
    const unsigned first = map.topology > n_threads ? 1 : 0;
    for (std::size_t i = 0; i < n_threads; ++i) {
        map.assignments[i] = static_cast<unsigned>((first + i) % map.topology);
    }
    return map;
}

PinnedThread::~PinnedThread() {
    if (thread_.joinable()) {
        thread_.join();
    }
}

void PinnedThread::join() {
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::chrono::nanoseconds PinnedThread::cpu_time() const {
    if (!thread_.joinable()) {
        return std::chrono::nanoseconds{0};
    }
    clockid_t clock{};
    // native_handle() is not const-qualified
    auto handle = const_cast<std::thread&>(thread_).native_handle();
    if (pthread_getcpuclockid(handle, &clock) != 0) {
        return std::chrono::nanoseconds{0};
    }
    timespec ts{};
    if (clock_gettime(clock, &ts) != 0) {
        return std::chrono::nanoseconds{0};
    }
    return std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec);
}

PinnedThread spawn_pinned(std::function<void()> body, std::optional<unsigned> core) {
    PinnedThread t;
    try {
        t.thread_ = std::thread(std::move(body));
    } catch (const std::system_error& e) {
        throw ConfigError(std::string("thread spawn failed: ") + e.what());
    }
    if (!core) {
        return t;
    }
    if (*core >= CPU_SETSIZE) {
        t.warning_ = "core " + std::to_string(*core) + " out of range; thread left unpinned";
        return t;
    }
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(*core, &set);
    const int rc = pthread_setaffinity_np(t.thread_.native_handle(), sizeof(set), &set);
    if (rc != 0) {
        t.warning_ = "pinning to core " + std::to_string(*core) + " failed (error " +
                     std::to_string(rc) + "); thread left unpinned";
    } else {
        t.core_ = core;
    }
    return t;
}

std::vector<unsigned> current_thread_affinity() {
    cpu_set_t set;
    CPU_ZERO(&set);
    std::vector<unsigned> out;
    if (pthread_getaffinity_np(pthread_self(), sizeof(set), &set) != 0) {
        return out;
    }
    for (unsigned c = 0; c < CPU_SETSIZE; ++c) {
        if (CPU_ISSET(c, &set)) {
            out.push_back(c);
        }
    }
    return out;
}

void FreezeLatch::freeze_point() {
    std::unique_lock lock(mutex_);
    frozen_ = true;
    const std::uint64_t gen = generation_;
    cv_.notify_all();
    cv_.wait(lock, [&] { return generation_ != gen; });
}

bool FreezeLatch::is_frozen() const {
    std::lock_guard lock(mutex_);
    return frozen_;
}

bool FreezeLatch::wait_frozen_for(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return frozen_; });
}

bool FreezeLatch::thaw() {
    std::lock_guard lock(mutex_);
    if (!frozen_) {
        return false;
    }
    frozen_ = false;
    ++generation_;
    cv_.notify_all();
    return true;
}

std::uint64_t FreezeLatch::completed_cycles() const {
    std::lock_guard lock(mutex_);
    return generation_;
}

std::size_t thaw_all(std::span<FreezeLatch* const> latches) {
    std::size_t resumed = 0;
    for (FreezeLatch* latch : latches) {
        resumed += latch->thaw() ? 1 : 0;
    }
    return resumed;
}

}  // namespace spareflow
