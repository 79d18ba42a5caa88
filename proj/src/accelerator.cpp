#include "spareflow/accelerator.hpp"

#include <numeric>
#include <thread>

namespace spareflow {

const char* state_name(AcceleratorState s) noexcept {
    switch (s) {
    case AcceleratorState::created:
        return "created";
    case AcceleratorState::running:
        return "running";
    case AcceleratorState::draining:
        return "draining";
    case AcceleratorState::frozen:
        return "frozen";
    case AcceleratorState::terminated:
        return "terminated";
    }
    return "unknown";
}

std::uint64_t RunReport::total_tasks() const {
    return std::accumulate(worker_tasks.begin(), worker_tasks.end(), std::uint64_t{0});
}

// Best-effort detection of concurrent control calls.
class Accelerator::ControlGuard {
public:
    explicit ControlGuard(std::atomic<bool>& flag) : flag_(flag) {
        if (flag_.exchange(true, std::memory_order_acquire)) {
            throw StateError("concurrent control call on the same accelerator");
        }
    }
    ~ControlGuard() { flag_.store(false, std::memory_order_release); }

    ControlGuard(const ControlGuard&) = delete;
    ControlGuard& operator=(const ControlGuard&) = delete;

private:
    std::atomic<bool>& flag_;
};

Accelerator::Accelerator(SkeletonGraph graph, AcceleratorConfig cfg)
    : graph_(std::move(graph)), cfg_(std::move(cfg)) {
    if (cfg_.queue_capacity <= 1) {
        throw ConfigError("queue_capacity must be greater than 1");
    }
    if (cfg_.n_workers) {
        if (*cfg_.n_workers < 1) {
            throw ConfigError("n_workers must be at least 1");
        }
        if (auto* farm = std::get_if<FarmSpec>(&graph_.node())) {
            farm->n = *cfg_.n_workers;
        }
    }
    relower();
}

Accelerator::~Accelerator() {
    try {
        switch (state_) {
        case AcceleratorState::running:
            offload_eos();
            [[fallthrough]];
        case AcceleratorState::draining:
        case AcceleratorState::frozen:
            wait();
            break;
        default:
            break;
        }
    } catch (...) {
        // threads are joined by PinnedThread's destructor
    }
}

void Accelerator::relower() {
    plan_ = lower(graph_, cfg_.queue_capacity, BackoffPolicy{cfg_.spin_budget, 64, false});
    core_map_ = make_core_map(plan_.threads.size(), cfg_.cores, logical_core_count(),
                              cfg_.pin && runtime_env().pinning_enabled);
    for (std::size_t i = 0; i < plan_.threads.size(); ++i) {
        plan_.threads[i].core_hint = core_map_.assignments[i];
    }
}

void Accelerator::state_error(const char* op, const char* expected) const {
    throw StateError(std::string(op) + ": accelerator is " + state_name(state_) + " (requires " +
                     expected + ")");
}

void Accelerator::spawn_threads() {
    stop_.store(false);
    slots_.clear();
    for (std::size_t i = 0; i < plan_.threads.size(); ++i) {
        slots_.push_back(std::make_unique<ThreadSlot>());
    }
    for (std::size_t i = 0; i < plan_.threads.size(); ++i) {
        ThreadSlot* slot = slots_[i].get();
        auto body = [this, i, slot] {
            for (;;) {
                plan_.threads[i].run_stream();
                if (!freeze_armed_.load(std::memory_order_acquire)) {
                    break;
                }
                slot->latch.freeze_point();
                if (stop_.load(std::memory_order_acquire)) {
                    break;
                }
            }
            slot->finished.store(true, std::memory_order_release);
        };
        slot->thread = spawn_pinned(std::move(body), plan_.threads[i].core_hint);
    }
}

void Accelerator::start(bool freeze) {
    if (state_ != AcceleratorState::created && state_ != AcceleratorState::frozen) {
        state_error(freeze ? "run_then_freeze" : "run", "created or frozen");
    }
    freeze_armed_.store(freeze, std::memory_order_release);
    ++streams_started_;
    if (slots_.empty()) {
        spawn_threads();
    } else {
        std::vector<FreezeLatch*> latches;
        for (auto& s : slots_) {
            latches.push_back(&s->latch);
        }
        thaw_all(latches);
    }
    state_ = AcceleratorState::running;
}

void Accelerator::run() {
    ControlGuard guard(in_control_);
    start(false);
}

void Accelerator::run_then_freeze() {
    ControlGuard guard(in_control_);
    start(true);
}

bool Accelerator::offload(Payload task) {
    if (state_ != AcceleratorState::running) {
        state_error("offload", "running");
    }
    const Message msg = Message::data(task);
    if (!cfg_.blocking_offload) {
        return plan_.entry->push(msg);
    }
    push_blocking(*plan_.entry, msg, BackoffPolicy{cfg_.spin_budget, 64, false});
    return true;
}

void Accelerator::offload_eos() {
    if (state_ != AcceleratorState::running) {
        state_error("offload_eos", "running");
    }
    push_blocking(*plan_.entry, Message::eos(), BackoffPolicy{cfg_.spin_budget, 64, false});
    state_ = AcceleratorState::draining;
}

void Accelerator::drain_exit() {
    if (!plan_.exit) {
        return;
    }
    while (auto m = plan_.exit->pop()) {
        results_.push_back(*m);
    }
}

std::optional<Message> Accelerator::next_result() {
    if (!results_.empty()) {
        Message m = results_.front();
        results_.pop_front();
        return m;
    }
    if (state_ == AcceleratorState::terminated) {
        return std::nullopt;
    }
    return plan_.exit->pop();
}

std::optional<Payload> Accelerator::load_result() {
    if (!plan_.exit) {
        throw CapabilityError("load_result: accelerator has no output channel (collector-less farm)");
    }
    if (state_ == AcceleratorState::created) {
        state_error("load_result", "running, draining, frozen or terminated");
    }
    auto m = next_result();
    if (!m) {
        return std::nullopt;
    }
    if (m->is_eos()) {
        ++streams_ended_;
        return std::nullopt;
    }
    return m->word;
}

std::optional<Payload> Accelerator::load_result_blocking() {
    if (!plan_.exit) {
        throw CapabilityError("load_result_blocking: accelerator has no output channel (collector-less farm)");
    }
    if (state_ == AcceleratorState::created) {
        state_error("load_result_blocking", "running, draining, frozen or terminated");
    }
    Backoff backoff(BackoffPolicy{cfg_.spin_budget, 64, false});
    while (streams_ended_ < streams_started_) {
        auto m = next_result();
        if (!m) {
            if (state_ == AcceleratorState::terminated) {
                return std::nullopt;
            }
            backoff.pause();
            continue;
        }
        if (m->is_eos()) {
            ++streams_ended_;
            return std::nullopt;
        }
        return m->word;
    }
    return std::nullopt;
}

void Accelerator::wait_all_frozen() {
    for (auto& s : slots_) {
        while (!s->latch.wait_frozen_for(std::chrono::milliseconds(1))) {
            drain_exit();
        }
    }
    drain_exit();
}

void Accelerator::wait_freezing() {
    ControlGuard guard(in_control_);
    if (state_ != AcceleratorState::draining || !freeze_armed_.load()) {
        state_error("wait_freezing", "draining after run_then_freeze");
    }
    wait_all_frozen();
    state_ = AcceleratorState::frozen;
}

void Accelerator::stop_threads() {
    if (slots_.empty()) {
        return;
    }
    if (freeze_armed_.load()) {
        wait_all_frozen();
        stop_.store(true, std::memory_order_release);
        std::vector<FreezeLatch*> latches;
        for (auto& s : slots_) {
            latches.push_back(&s->latch);
        }
        thaw_all(latches);
    }
    for (auto& s : slots_) {
        while (!s->finished.load(std::memory_order_acquire)) {
            drain_exit();
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
        s->thread.join();
    }
    drain_exit();
    slots_.clear();
}

RunReport Accelerator::wait() {
    ControlGuard guard(in_control_);
    if (state_ != AcceleratorState::draining && state_ != AcceleratorState::frozen) {
        state_error("wait", "draining or frozen");
    }
    stop_threads();
    state_ = AcceleratorState::terminated;
    return report();
}

void Accelerator::add_workers(int k) {
    ControlGuard guard(in_control_);
    if (state_ != AcceleratorState::created && state_ != AcceleratorState::frozen) {
        state_error("add_workers", "created or frozen");
    }
    auto* farm = std::get_if<FarmSpec>(&graph_.node());
    if (farm == nullptr) {
        throw CapabilityError("add_workers: root skeleton is not a farm");
    }
    if (k < 0) {
        throw ConfigError("add_workers: k must be non-negative");
    }
    if (k == 0) {
        return;
    }
    // parked threads belong to the old plan; the next run spawns fresh ones
    stop_threads();
    farm->n += k;
    relower();
}

RunReport Accelerator::report() const {
    RunReport r;
    for (const auto& w : plan_.workers) {
        r.worker_tasks.push_back(w->tasks());
    }
    r.faults = plan_.faults->snapshot();
    r.failed = !r.faults.empty();
    return r;
}

std::vector<std::chrono::nanoseconds> Accelerator::thread_cpu_times() const {
    std::vector<std::chrono::nanoseconds> out;
    for (const auto& s : slots_) {
        out.push_back(s->thread.cpu_time());
    }
    return out;
}

std::vector<std::string> Accelerator::pin_warnings() const {
    std::vector<std::string> out;
    for (const auto& s : slots_) {
        if (s->thread.warning()) {
            out.push_back(*s->thread.warning());
        }
    }
    return out;
}

}  // namespace spareflow
