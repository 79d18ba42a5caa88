#include "spareflow/skeletons.hpp"

#include "spareflow/errors.hpp"

#include <deque>
#include <exception>
#include <type_traits>
#include <utility>

namespace spareflow {

void Node::send_out(Payload p) {
    if (out_ != nullptr) {
        push_blocking(*out_, Message::data(p), backoff_);
    }
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_at(const SkeletonGraph& g, const std::string& path, std::vector<std::string>& errors) {
    std::visit(
        overloaded{
            [&](const StageSpec& s) {
                if (!s.factory) {
                    errors.push_back("stage without a node factory at path " + path);
                }
            },
            [&](const FarmSpec& f) {
                if (f.n < 1) {
                    errors.push_back("farm requires n >= 1 at path " + path);
                }
                if (!f.worker) {
                    errors.push_back("farm without a worker factory at path " + path);
                }
            },
            [&](const PipelineSpec& p) {
                if (p.stages.empty()) {
                    errors.push_back("empty pipeline at path " + path);
                    return;
                }
                for (std::size_t i = 0; i < p.stages.size(); ++i) {
                    const std::string sub = path + "/stage[" + std::to_string(i) + "]";
                    validate_at(p.stages[i], sub, errors);
                    if (i + 1 < p.stages.size() && !has_exit(p.stages[i])) {
                        errors.push_back("stage without output is followed by another stage at path " + sub);
                    }
                }
            },
            [&](const FeedbackSpec& fb) {
                if (!fb.route_back) {
                    errors.push_back("feedback without a route_back predicate at path " + path);
                }
                if (!fb.body) {
                    errors.push_back("feedback without a body at path " + path);
                    return;
                }
                if (!fb.body->is_farm()) {
                    errors.push_back("feedback body must be a farm (master-workers) at path " + path + "/body");
                }
                validate_at(*fb.body, path + "/body", errors);
            },
        },
        g.node());
}

}  // namespace

std::vector<std::string> validate(const SkeletonGraph& g) {
    std::vector<std::string> errors;
    validate_at(g, "root", errors);
    return errors;
}

bool has_exit(const SkeletonGraph& g) {
    return std::visit(overloaded{
                          [](const StageSpec&) { return true; },
                          [](const FarmSpec& f) { return f.with_collector; },
                          [](const PipelineSpec& p) { return !p.stages.empty() && has_exit(p.stages.back()); },
                          [](const FeedbackSpec&) { return true; },
                      },
                      g.node());
}

void FaultRegister::record(std::string what) {
    std::lock_guard lock(mutex_);
    faults_.push_back(std::move(what));
}

std::vector<std::string> FaultRegister::snapshot() const {
    std::lock_guard lock(mutex_);
    return faults_;
}

bool FaultRegister::empty() const {
    std::lock_guard lock(mutex_);
    return faults_.empty();
}

WorkerBody::WorkerBody(std::unique_ptr<Node> node, ChannelPtr in, ChannelPtr out,
                       std::shared_ptr<FaultRegister> faults, std::string name, bool ack_mode,
                       BackoffPolicy backoff)
    : node_(std::move(node)),
      in_(std::move(in)),
      out_(std::move(out)),
      faults_(std::move(faults)),
      name_(std::move(name)),
      ack_mode_(ack_mode),
      backoff_(backoff) {
    node_->out_ = out_.get();
    node_->backoff_ = backoff_;
}

void WorkerBody::run_stream() {
    failed_ = false;
    try {
        node_->on_start();
    } catch (const std::exception& e) {
        failed_ = true;
        faults_->record(name_ + ": on_start: " + e.what());
    }
    Backoff backoff(backoff_);
    for (;;) {
        auto msg = in_->pop();
        if (!msg) {
            backoff.pause();
            continue;
        }
        backoff.reset();
        if (msg->is_eos()) {
            if (out_) {
                push_blocking(*out_, Message::eos(), backoff_);
            }
            try {
                node_->on_finish();
            } catch (const std::exception& e) {
                faults_->record(name_ + ": on_finish: " + e.what());
            }
            return;
        }
        // after a fault, inputs are drained without being processed
        if (!failed_) {
            ++tasks_;
            try {
                if (auto result = node_->svc(msg->word); result && out_) {
                    push_blocking(*out_, Message::data(*result), backoff_);
                }
            } catch (const std::exception& e) {
                failed_ = true;
                faults_->record(name_ + ": " + e.what());
            } catch (...) {
                failed_ = true;
                faults_->record(name_ + ": unknown fault");
            }
        }
        if (ack_mode_) {
            push_blocking(*out_, Message::ack(), backoff_);
        }
    }
}

std::function<void()> worker_loop(std::shared_ptr<WorkerBody> worker) {
    return [worker = std::move(worker)] { worker->run_stream(); };
}

const char* role_name(Role r) noexcept {
    switch (r) {
    case Role::emitter:
        return "emitter";
    case Role::worker:
        return "worker";
    case Role::collector:
        return "collector";
    case Role::collector_emitter:
        return "collector_emitter";
    }
    return "unknown";
}

std::size_t WiringPlan::count(Role r) const {
    std::size_t n = 0;
    for (const auto& t : threads) {
        n += t.role == r ? 1 : 0;
    }
    return n;
}

std::size_t WiringPlan::internal_queue_count() const {
    std::size_t n = 0;
    for (const auto& q : queues) {
        n += q.internal() ? 1 : 0;
    }
    return n;
}

namespace {

// Master of a farm-with-feedback. Every worker acknowledges each input after
// its outputs, so the master knows when no payload is left inside the body.
class FeedbackMaster {
public:
    FeedbackMaster(ChannelPtr entry, std::vector<ChannelPtr> to_workers,
                   std::vector<ChannelPtr> from_workers, ChannelPtr exit,
                   std::function<bool(Payload)> route_back, SchedulingPolicy policy,
                   BackoffPolicy backoff)
        : entry_(std::move(entry)),
          to_workers_(std::move(to_workers)),
          from_workers_(std::move(from_workers)),
          exit_(std::move(exit)),
          route_back_(std::move(route_back)),
          policy_(policy),
          backoff_(backoff) {}

    void run_stream() {
        std::deque<Payload> pending_in;
        std::deque<Payload> pending_out;
        std::uint64_t outstanding = 0;
        std::size_t eos_back = 0;
        bool external_eos = false;
        bool eos_sent = false;
        const std::size_t admit_limit = entry_->capacity();
        Backoff backoff(backoff_);

        for (;;) {
            bool progress = false;

            for (auto& q : from_workers_) {
                while (auto m = q->pop()) {
                    progress = true;
                    if (m->is_ack()) {
                        --outstanding;
                    } else if (m->is_eos()) {
                        ++eos_back;
                    } else if (route_back_(m->word)) {
                        pending_in.push_back(m->word);
                    } else {
                        pending_out.push_back(m->word);
                    }
                }
            }

            while (!external_eos && pending_in.size() < admit_limit) {
                auto m = entry_->pop();
                if (!m) {
                    break;
                }
                progress = true;
                if (m->is_eos()) {
                    external_eos = true;
                } else {
                    pending_in.push_back(m->word);
                }
            }

            while (!pending_in.empty() && try_dispatch(pending_in.front())) {
                pending_in.pop_front();
                ++outstanding;
                progress = true;
            }

            while (!pending_out.empty() && exit_->push(Message::data(pending_out.front()))) {
                pending_out.pop_front();
                progress = true;
            }

            if (external_eos && !eos_sent && outstanding == 0 && pending_in.empty()) {
                for (auto& q : to_workers_) {
                    push_blocking(*q, Message::eos(), backoff_);
                }
                eos_sent = true;
                progress = true;
            }
            if (eos_sent && eos_back == to_workers_.size() && pending_out.empty()) {
                push_blocking(*exit_, Message::eos(), backoff_);
                return;
            }

            if (progress) {
                backoff.reset();
            } else {
                backoff.pause();
            }
        }
    }

private:
    bool try_dispatch(Payload p) {
        const std::size_t n = to_workers_.size();
        if (policy_ == SchedulingPolicy::on_demand) {
            const auto target = select_output(policy_, to_workers_, next_rr_);
            return target && to_workers_[*target]->push(Message::data(p));
        }
        // never block: a worker waiting on us to drain its output would deadlock
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = (next_rr_ + k) % n;
            if (to_workers_[i]->push(Message::data(p))) {
                next_rr_ = (i + 1) % n;
                return true;
            }
        }
        return false;
    }

    ChannelPtr entry_;
    std::vector<ChannelPtr> to_workers_;
    std::vector<ChannelPtr> from_workers_;
    ChannelPtr exit_;
    std::function<bool(Payload)> route_back_;
    SchedulingPolicy policy_;
    BackoffPolicy backoff_;
    std::size_t next_rr_ = 0;
};

class Lowering {
public:
    Lowering(std::size_t q_cap, BackoffPolicy backoff) : q_cap_(q_cap), backoff_(backoff) {
        plan_.faults = std::make_shared<FaultRegister>();
    }

    WiringPlan finish(const SkeletonGraph& g) {
        plan_.entry = new_queue(PlanQueue::kExternal);
        plan_.exit = lower(g, plan_.entry, "root");
        return std::move(plan_);
    }

private:
    ChannelPtr new_queue(int from) {
        auto q = make_channel(q_cap_);
        plan_.queues.push_back({q, from, PlanQueue::kExternal});
        return q;
    }

    void set_consumer(const ChannelPtr& q, int thread) {
        for (auto& pq : plan_.queues) {
            if (pq.queue == q) {
                pq.to = thread;
                return;
            }
        }
    }

    int add_thread(Role role, std::string name, std::function<void()> body) {
        plan_.threads.push_back({role, std::move(name), std::move(body), std::nullopt});
        return static_cast<int>(plan_.threads.size()) - 1;
    }

    int add_worker(std::unique_ptr<Node> node, const ChannelPtr& in, bool with_out, bool ack_mode,
                   const std::string& name, ChannelPtr* out) {
        const int idx = static_cast<int>(plan_.threads.size());
        ChannelPtr out_q = with_out ? new_queue(idx) : nullptr;
        auto worker = std::make_shared<WorkerBody>(std::move(node), in, out_q, plan_.faults, name,
                                                   ack_mode, backoff_);
        plan_.workers.push_back(worker);
        add_thread(Role::worker, name, worker_loop(worker));
        set_consumer(in, idx);
        if (out != nullptr) {
            *out = out_q;
        }
        return idx;
    }

    ChannelPtr lower(const SkeletonGraph& g, const ChannelPtr& in, const std::string& path) {
        return std::visit(
            overloaded{
                [&](const StageSpec& s) { return lower_stage(s, in, path); },
                [&](const FarmSpec& f) { return lower_farm(f, in, path); },
                [&](const PipelineSpec& p) { return lower_pipeline(p, in, path); },
                [&](const FeedbackSpec& fb) { return lower_feedback(fb, in, path); },
            },
            g.node());
    }

    ChannelPtr lower_stage(const StageSpec& s, const ChannelPtr& in, const std::string& path) {
        ChannelPtr out;
        add_worker(s.factory(), in, true, false, path, &out);
        return out;
    }

    ChannelPtr lower_farm(const FarmSpec& f, const ChannelPtr& in, const std::string& path) {
        auto emitter = std::make_shared<EmitterState>();
        emitter->input = in;
        emitter->policy = f.policy;
        emitter->backoff = backoff_;
        const int e_idx = add_thread(Role::emitter, path + "/emitter", [emitter] { run_emitter(*emitter); });
        set_consumer(in, e_idx);

        std::vector<ChannelPtr> results;
        for (int i = 0; i < f.n; ++i) {
            ChannelPtr to_worker = new_queue(e_idx);
            emitter->outputs.push_back(to_worker);
            ChannelPtr out;
            add_worker(f.worker(), to_worker, f.with_collector, false,
                       path + "/worker[" + std::to_string(i) + "]", &out);
            if (out) {
                results.push_back(out);
            }
        }
        if (!f.with_collector) {
            return nullptr;
        }

        auto collector = std::make_shared<CollectorState>();
        collector->inputs = results;
        collector->backoff = backoff_;
        const int c_idx =
            add_thread(Role::collector, path + "/collector", [collector] { run_collector(*collector); });
        for (const auto& q : results) {
            set_consumer(q, c_idx);
        }
        collector->output = new_queue(c_idx);
        return collector->output;
    }

    ChannelPtr lower_pipeline(const PipelineSpec& p, const ChannelPtr& in, const std::string& path) {
        ChannelPtr current = in;
        for (std::size_t i = 0; i < p.stages.size(); ++i) {
            current = lower(p.stages[i], current, path + "/stage[" + std::to_string(i) + "]");
        }
        return current;
    }

    ChannelPtr lower_feedback(const FeedbackSpec& fb, const ChannelPtr& in, const std::string& path) {
        const auto& farm = std::get<FarmSpec>(fb.body->node());
        const int m_idx = static_cast<int>(plan_.threads.size());
        // reserve the master's slot first so its queues carry the right index
        add_thread(Role::collector_emitter, path + "/master", nullptr);
        set_consumer(in, m_idx);

        std::vector<ChannelPtr> to_workers;
        std::vector<ChannelPtr> from_workers;
        for (int i = 0; i < farm.n; ++i) {
            ChannelPtr to_worker = new_queue(m_idx);
            ChannelPtr back;
            add_worker(farm.worker(), to_worker, true, true,
                       path + "/body/worker[" + std::to_string(i) + "]", &back);
            set_consumer(back, m_idx);
            to_workers.push_back(to_worker);
            from_workers.push_back(back);
        }
        ChannelPtr out = new_queue(m_idx);
        auto master = std::make_shared<FeedbackMaster>(in, to_workers, from_workers, out, fb.route_back,
                                                       farm.policy, backoff_);
        plan_.threads[static_cast<std::size_t>(m_idx)].run_stream = [master] { master->run_stream(); };
        return out;
    }

    std::size_t q_cap_;
    BackoffPolicy backoff_;
    WiringPlan plan_;
};

}  // namespace

WiringPlan lower(const SkeletonGraph& g, std::size_t q_cap, BackoffPolicy backoff) {
    if (auto errors = validate(g); !errors.empty()) {
        std::string msg = "invalid skeleton graph:";
        for (const auto& e : errors) {
            msg += "\n  " + e;
        }
        throw ValidationError(msg);
    }
    if (q_cap <= 1) {
        throw ConfigError("queue capacity must be greater than 1");
    }
    return Lowering(q_cap, backoff).finish(g);
}

}  // namespace spareflow
