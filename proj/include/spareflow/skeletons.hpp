#pragma once

/*!
 * \file skeletons.hpp
 * \brief Farm, pipeline and farm-with-feedback composition, lowered to a
 *        wiring plan of SPSC queues and thread bodies.
 *
 * A SkeletonGraph is a declarative tree. lower() turns it into a WiringPlan:
 * one runnable body per thread (emitters, workers, collectors, feedback
 * masters) and the queues between them, each with exactly one producer and
 * one consumer. Bodies process one stream per call, so a plan can be run
 * again after a freeze without being rebuilt.
 */

#include "spareflow/channels.hpp"
#include "spareflow/message.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace spareflow {

// Behaviour of one stage or farm worker. Each instance is driven by exactly
// one thread, so it may keep private state across calls and across streams.
class Node {
public:
    virtual ~Node() = default;

    // Returning nullopt means "no output for this input".
    virtual std::optional<Payload> svc(Payload task) = 0;

    virtual void on_start() {}
    virtual void on_finish() {}

protected:
    // Emits an additional output for the input being processed. Dropped when
    // the node has no output channel.
    void send_out(Payload p);

private:
    friend class WorkerBody;
    Channel* out_ = nullptr;
    BackoffPolicy backoff_{};
};

using NodeFactory = std::function<std::unique_ptr<Node>()>;

// Node around a callable; each factory call copies the callable, so a
// mutable lambda gets per-instance state.
template <typename F>
class FunctionNode final : public Node {
public:
    explicit FunctionNode(F f) : f_(std::move(f)) {}
    std::optional<Payload> svc(Payload task) override { return f_(task); }

private:
    F f_;
};

template <typename F>
NodeFactory node_factory(F f) {
    return [f]() -> std::unique_ptr<Node> { return std::make_unique<FunctionNode<F>>(f); };
}

class SkeletonGraph;

struct StageSpec {
    NodeFactory factory;
};

struct FarmSpec {
    NodeFactory worker;
    int n = 1;
    SchedulingPolicy policy = SchedulingPolicy::round_robin;
    bool with_collector = true;
};

struct PipelineSpec {
    std::vector<SkeletonGraph> stages;
};

// Payloads leaving the body with route_back(p) == true re-enter the body;
// the rest leave the skeleton.
struct FeedbackSpec {
    std::shared_ptr<SkeletonGraph> body;
    std::function<bool(Payload)> route_back;
};

class SkeletonGraph {
public:
    using Variant = std::variant<StageSpec, FarmSpec, PipelineSpec, FeedbackSpec>;

    SkeletonGraph(StageSpec s) : node_(std::move(s)) {}
    SkeletonGraph(FarmSpec f) : node_(std::move(f)) {}
    SkeletonGraph(PipelineSpec p) : node_(std::move(p)) {}
    SkeletonGraph(FeedbackSpec f) : node_(std::move(f)) {}

    static SkeletonGraph stage(NodeFactory f) { return StageSpec{std::move(f)}; }
    static SkeletonGraph farm(NodeFactory worker, int n, bool with_collector = true,
                              SchedulingPolicy policy = SchedulingPolicy::round_robin) {
        return FarmSpec{std::move(worker), n, policy, with_collector};
    }
    static SkeletonGraph pipeline(std::vector<SkeletonGraph> stages) {
        return PipelineSpec{std::move(stages)};
    }
    static SkeletonGraph feedback(SkeletonGraph body, std::function<bool(Payload)> route_back) {
        return FeedbackSpec{std::make_shared<SkeletonGraph>(std::move(body)), std::move(route_back)};
    }

    const Variant& node() const noexcept { return node_; }
    Variant& node() noexcept { return node_; }

    bool is_farm() const noexcept { return std::holds_alternative<FarmSpec>(node_); }

private:
    Variant node_;
};

// Empty iff the graph is well formed; each message names the subtree path.
std::vector<std::string> validate(const SkeletonGraph& g);

// Whether the lowered graph exposes an output endpoint.
bool has_exit(const SkeletonGraph& g);

class FaultRegister {
public:
    void record(std::string what);
    std::vector<std::string> snapshot() const;
    bool empty() const;

private:
    mutable std::mutex mutex_;
    std::vector<std::string> faults_;
};

// Runs one Node over an input channel until EOS.
class WorkerBody {
public:
    WorkerBody(std::unique_ptr<Node> node, ChannelPtr in, ChannelPtr out,
               std::shared_ptr<FaultRegister> faults, std::string name, bool ack_mode = false,
               BackoffPolicy backoff = default_backoff());

    // Processes one stream: on_start, svc per item, EOS forwarding, on_finish.
    void run_stream();

    Node& node() noexcept { return *node_; }
    const std::string& name() const noexcept { return name_; }

    // Items handed to svc so far (all streams). Read only when the worker is
    // quiescent (joined or frozen).
    std::uint64_t tasks() const noexcept { return tasks_; }
    bool failed() const noexcept { return failed_; }

private:
    std::unique_ptr<Node> node_;
    ChannelPtr in_;
    ChannelPtr out_;
    std::shared_ptr<FaultRegister> faults_;
    std::string name_;
    bool ack_mode_;
    BackoffPolicy backoff_;
    std::uint64_t tasks_ = 0;
    bool failed_ = false;
};

std::function<void()> worker_loop(std::shared_ptr<WorkerBody> worker);

enum class Role { emitter, worker, collector, collector_emitter };

const char* role_name(Role r) noexcept;

struct PlanThread {
    Role role;
    std::string name;
    std::function<void()> run_stream;
    std::optional<unsigned> core_hint;
};

// from/to are thread indices; kExternal marks the plan boundary.
struct PlanQueue {
    static constexpr int kExternal = -1;

    ChannelPtr queue;
    int from = kExternal;
    int to = kExternal;

    bool internal() const noexcept { return from != kExternal && to != kExternal; }
};

struct WiringPlan {
    std::vector<PlanThread> threads;
    std::vector<PlanQueue> queues;
    ChannelPtr entry;
    ChannelPtr exit;  // null for collector-less farms
    std::vector<std::shared_ptr<WorkerBody>> workers;
    std::shared_ptr<FaultRegister> faults;

    std::size_t count(Role r) const;
    std::size_t internal_queue_count() const;
};

// Throws ValidationError when validate(g) is non-empty, ConfigError when
// q_cap <= 1.
WiringPlan lower(const SkeletonGraph& g, std::size_t q_cap,
                 BackoffPolicy backoff = default_backoff());

}  // namespace spareflow
