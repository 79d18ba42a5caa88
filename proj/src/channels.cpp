#include "spareflow/channels.hpp"

#include "spareflow/errors.hpp"

#include <string>

namespace spareflow {

ChannelPtr make_channel(std::size_t capacity) {
    if (capacity <= 1) {
        throw ConfigError("channel capacity must be greater than 1, got " + std::to_string(capacity));
    }
    return std::make_shared<Channel>(capacity);
}

void push_blocking(Channel& q, const Message& msg, const BackoffPolicy& policy) {
    Backoff backoff(policy);
    while (!q.push(msg)) {
        backoff.pause();
    }
}

Message pop_blocking(Channel& q, const BackoffPolicy& policy) {
    Backoff backoff(policy);
    for (;;) {
        if (auto m = q.pop()) {
            return *m;
        }
        backoff.pause();
    }
}

std::optional<std::size_t> select_output(SchedulingPolicy policy,
                                         const std::vector<ChannelPtr>& outputs,
                                         std::size_t next_rr) {
    if (policy == SchedulingPolicy::round_robin) {
        return next_rr % outputs.size();
    }
    std::size_t best = 0;
    std::size_t best_free = 0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const std::size_t free = outputs[i]->approx_free();
        if (free > best_free) {
            best = i;
            best_free = free;
        }
    }
    if (best_free == 0) {
        return std::nullopt;
    }
    return best;
}

void dispatch(EmitterState& s, const Message& msg) {
    if (msg.is_eos()) {
        for (auto& out : s.outputs) {
            push_blocking(*out, msg, s.backoff);
        }
        return;
    }
    if (s.sent.size() != s.outputs.size()) {
        s.sent.assign(s.outputs.size(), 0);
    }
    Backoff backoff(s.backoff);
    for (;;) {
        const auto target = select_output(s.policy, s.outputs, s.next_rr);
        if (target && s.outputs[*target]->push(msg)) {
            ++s.sent[*target];
            s.next_rr = (*target + 1) % s.outputs.size();
            return;
        }
        backoff.pause();
    }
}

ProgressReport emitter_step(EmitterState& s) {
    auto msg = s.input->pop();
    if (!msg) {
        return {};
    }
    dispatch(s, *msg);
    if (msg->is_eos()) {
        return {false, true};
    }
    return {true, false};
}

void CollectorState::reset_stream() {
    eos_seen = 0;
    eos_from.assign(inputs.size(), false);
}

std::optional<Message> collector_poll(CollectorState& s) {
    const std::size_t n = s.inputs.size();
    if (s.eos_from.size() != n) {
        s.eos_from.assign(n, false);
    }
    const std::size_t start = s.next_poll;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = (start + k) % n;
        if (s.eos_from[i]) {
            continue;
        }
        auto msg = s.inputs[i]->pop();
        if (!msg) {
            continue;
        }
        s.next_poll = (i + 1) % n;
        if (msg->is_eos()) {
            s.eos_from[i] = true;
            if (++s.eos_seen == n) {
                return Message::eos();
            }
            continue;
        }
        return msg;
    }
    return std::nullopt;
}

ProgressReport collector_step(CollectorState& s) {
    auto msg = collector_poll(s);
    if (!msg) {
        return {};
    }
    push_blocking(*s.output, *msg, s.backoff);
    if (msg->is_eos()) {
        return {false, true};
    }
    return {true, false};
}

void run_emitter(EmitterState& s) {
    Backoff backoff(s.backoff);
    for (;;) {
        const ProgressReport r = emitter_step(s);
        if (r.eos_done) {
            return;
        }
        if (r.dispatched) {
            backoff.reset();
        } else {
            backoff.pause();
        }
    }
}

void run_collector(CollectorState& s) {
    s.reset_stream();
    Backoff backoff(s.backoff);
    for (;;) {
        const ProgressReport r = collector_step(s);
        if (r.eos_done) {
            return;
        }
        if (r.dispatched) {
            backoff.reset();
        } else {
            backoff.pause();
        }
    }
}

ProgressReport collector_emitter_step(CollectorEmitterState& s) {
    if (!s.in_flight) {
        s.in_flight = collector_poll(s.gather);
    }
    if (!s.in_flight) {
        return {};
    }
    const Message msg = *s.in_flight;
    dispatch(s.scatter, msg);
    s.in_flight.reset();
    if (msg.is_eos()) {
        return {false, true};
    }
    return {true, false};
}

void run_collector_emitter(CollectorEmitterState& s) {
    s.gather.reset_stream();
    s.in_flight.reset();
    Backoff backoff(s.gather.backoff);
    for (;;) {
        const ProgressReport r = collector_emitter_step(s);
        if (r.eos_done) {
            return;
        }
        if (r.dispatched) {
            backoff.reset();
        } else {
            backoff.pause();
        }
    }
}

namespace {

void check_arity(int n, const char* what) {
    if (n < 1) {
        throw ConfigError(std::string(what) + " must be at least 1, got " + std::to_string(n));
    }
}

std::vector<ChannelPtr> make_channels(int n, std::size_t cap) {
    std::vector<ChannelPtr> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.push_back(make_channel(cap));
    }
    return out;
}

}  // namespace

SpmcChannel build_spmc(int n, std::size_t cap, SchedulingPolicy policy) {
    check_arity(n, "consumer count");
    auto state = std::make_shared<EmitterState>();
    state->input = make_channel(cap);
    state->outputs = make_channels(n, cap);
    state->policy = policy;
    SpmcChannel ch;
    ch.producer = state->input;
    ch.consumers = state->outputs;
    ch.arbiter = [state] { run_emitter(*state); };
    return ch;
}

MpscChannel build_mpsc(int n, std::size_t cap) {
    check_arity(n, "producer count");
    auto state = std::make_shared<CollectorState>();
    state->inputs = make_channels(n, cap);
    state->output = make_channel(cap);
    MpscChannel ch;
    ch.producers = state->inputs;
    ch.consumer = state->output;
    ch.arbiter = [state] { run_collector(*state); };
    return ch;
}

MpmcChannel build_mpmc(int n_prod, int n_cons, std::size_t cap, SchedulingPolicy policy) {
    check_arity(n_prod, "producer count");
    check_arity(n_cons, "consumer count");
    auto state = std::make_shared<CollectorEmitterState>();
    state->gather.inputs = make_channels(n_prod, cap);
    state->scatter.outputs = make_channels(n_cons, cap);
    state->scatter.policy = policy;
    MpmcChannel ch;
    ch.producers = state->gather.inputs;
    ch.consumers = state->scatter.outputs;
    ch.arbiter = [state] { run_collector_emitter(*state); };
    return ch;
}

}  // namespace spareflow
