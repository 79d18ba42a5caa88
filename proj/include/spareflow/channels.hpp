#pragma once

/*!
 * \file channels.hpp
 * \brief SPMC, MPSC and MPMC channels made of SPSC queues plus an arbiter.
 *
 * The arbiter thread (Emitter, Collector or Collector-Emitter) is the only
 * party touching the shared end of every queue, so each queue keeps a single
 * producer and a single consumer and no locks or atomic read-modify-write
 * operations appear on the data path.
 */

#include "spareflow/message.hpp"
#include "spareflow/runtime.hpp"
#include "spareflow/spsc.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace spareflow {

using Channel = SpscQueue<Message>;
using ChannelPtr = std::shared_ptr<Channel>;

ChannelPtr make_channel(std::size_t capacity);

enum class SchedulingPolicy {
    round_robin,
    on_demand,  // output with the most free slots, lowest index on ties
};

struct ProgressReport {
    bool dispatched = false;
    bool eos_done = false;

    bool progressed() const noexcept { return dispatched || eos_done; }
};

struct EmitterState {
    ChannelPtr input;
    std::vector<ChannelPtr> outputs;
    SchedulingPolicy policy = SchedulingPolicy::round_robin;
    std::size_t next_rr = 0;
    BackoffPolicy backoff = default_backoff();
    std::vector<std::uint64_t> sent;  // per-output data count
};

struct CollectorState {
    std::vector<ChannelPtr> inputs;
    ChannelPtr output;
    std::size_t eos_seen = 0;
    std::vector<bool> eos_from;
    std::size_t next_poll = 0;
    BackoffPolicy backoff = default_backoff();

    // Clears EOS bookkeeping so the same state can serve another stream.
    void reset_stream();
};

// Index of the output the next data message goes to; nullopt when the
// policy finds every output full (on_demand only).
std::optional<std::size_t> select_output(SchedulingPolicy policy,
                                         const std::vector<ChannelPtr>& outputs,
                                         std::size_t next_rr);

// Pushes msg to outputs according to the emitter's policy, retrying with
// backoff; EOS goes to every output.
void dispatch(EmitterState& s, const Message& msg);

ProgressReport emitter_step(EmitterState& s);

// Next message the collector would forward: a data message, or the single
// downstream EOS once every input has delivered its own.
std::optional<Message> collector_poll(CollectorState& s);

ProgressReport collector_step(CollectorState& s);

// Runs the step function until the stream's EOS has been handled.
void run_emitter(EmitterState& s);
void run_collector(CollectorState& s);

struct CollectorEmitterState {
    CollectorState gather;
    EmitterState scatter;
    std::optional<Message> in_flight;
};

ProgressReport collector_emitter_step(CollectorEmitterState& s);
void run_collector_emitter(CollectorEmitterState& s);

// Arbiter bodies run one stream (until EOS) per call and may be invoked
// again for the next stream.
struct SpmcChannel {
    ChannelPtr producer;
    std::vector<ChannelPtr> consumers;
    std::function<void()> arbiter;
};

struct MpscChannel {
    std::vector<ChannelPtr> producers;
    ChannelPtr consumer;
    std::function<void()> arbiter;
};

struct MpmcChannel {
    std::vector<ChannelPtr> producers;
    std::vector<ChannelPtr> consumers;
    std::function<void()> arbiter;
};

SpmcChannel build_spmc(int n, std::size_t cap, SchedulingPolicy policy);
MpscChannel build_mpsc(int n, std::size_t cap);
MpmcChannel build_mpmc(int n_prod, int n_cons, std::size_t cap, SchedulingPolicy policy);

// Blocking helpers for endpoint owners.
void push_blocking(Channel& q, const Message& msg, const BackoffPolicy& policy = default_backoff());
Message pop_blocking(Channel& q, const BackoffPolicy& policy = default_backoff());

}  // namespace spareflow
