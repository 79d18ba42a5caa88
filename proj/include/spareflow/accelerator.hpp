#pragma once

/*!
 * \file accelerator.hpp
 * \brief Self-offloading accelerator: a skeleton wrapped as a software device
 *        with one untyped input stream and one untyped output stream.
 *
 * Lifecycle:
 *
 *   Created --run/run_then_freeze--> Running --offload_eos--> Draining
 *   Draining --wait_freezing--> Frozen --run/run_then_freeze--> Running
 *   Draining/Frozen --wait--> Terminated
 *
 * Anything else raises StateError. While Running, accelerator threads poll
 * with active waiting and keep their cores busy; while Frozen they are parked
 * in the host scheduler and their node instances keep their state.
 *
 * Threading: one external thread offloads, one (possibly the same) consumes
 * results, and control calls come from a single thread at a time. wait() and
 * wait_freezing() take over the result-consumer role while they block, moving
 * pending results to an internal buffer that load_result() reads first.
 *
 * Payloads are untyped words; interpreting them is up to the embedding code.
 */

#include "spareflow/errors.hpp"
#include "spareflow/runtime.hpp"
#include "spareflow/skeletons.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spareflow {

enum class AcceleratorState { created, running, draining, frozen, terminated };

const char* state_name(AcceleratorState s) noexcept;

struct AcceleratorConfig {
    std::vector<unsigned> cores;      // explicit pinning list; empty selects the default map
    std::optional<int> n_workers;     // overrides the width of a root farm
    std::size_t queue_capacity = 512;
    bool blocking_offload = true;
    std::uint32_t spin_budget = runtime_env().spin_budget;
    bool pin = true;
};

struct RunReport {
    std::vector<std::uint64_t> worker_tasks;
    std::vector<std::string> faults;
    bool failed = false;

    std::uint64_t total_tasks() const;
};

class Accelerator {
public:
    Accelerator(SkeletonGraph graph, AcceleratorConfig cfg = {});
    ~Accelerator();

    Accelerator(const Accelerator&) = delete;
    Accelerator& operator=(const Accelerator&) = delete;

    void run();
    void run_then_freeze();

    // Non-blocking mode returns false when the input channel is full.
    bool offload(Payload task);
    void offload_eos();

    std::optional<Payload> load_result();
    // Absent only once the current stream's EOS has reached the output.
    std::optional<Payload> load_result_blocking();

    void wait_freezing();
    RunReport wait();

    void add_workers(int k);

    AcceleratorState state() const noexcept { return state_; }
    bool has_output() const noexcept { return plan_.exit != nullptr; }
    std::size_t thread_count() const noexcept { return plan_.threads.size(); }
    const WiringPlan& plan() const noexcept { return plan_; }
    const CoreMap& core_map() const noexcept { return core_map_; }
    const AcceleratorConfig& config() const noexcept { return cfg_; }

    // Worker counters; meaningful when the accelerator is Frozen or Terminated.
    RunReport report() const;

    std::vector<std::chrono::nanoseconds> thread_cpu_times() const;
    std::vector<std::string> pin_warnings() const;

private:
    struct ThreadSlot {
        FreezeLatch latch;
        PinnedThread thread;
        std::atomic<bool> finished{false};
    };

    class ControlGuard;

    void relower();
    void start(bool freeze);
    void spawn_threads();
    void wait_all_frozen();
    void stop_threads();
    void drain_exit();
    std::optional<Message> next_result();
    [[noreturn]] void state_error(const char* op, const char* expected) const;

    SkeletonGraph graph_;
    AcceleratorConfig cfg_;
    WiringPlan plan_;
    CoreMap core_map_;
    std::vector<std::unique_ptr<ThreadSlot>> slots_;
    AcceleratorState state_ = AcceleratorState::created;

    std::atomic<bool> freeze_armed_{false};
    std::atomic<bool> stop_{false};
    std::atomic<bool> in_control_{false};

    std::deque<Message> results_;
    std::uint64_t streams_started_ = 0;
    std::uint64_t streams_ended_ = 0;
};

}  // namespace spareflow
