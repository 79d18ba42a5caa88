#include "spareflow/bench/nqueens.hpp"

#include "spareflow/errors.hpp"

#include <string>

namespace spareflow::bench {

void check_nqueens_args(int n, int depth) {
    if (n < kMinBoard || n > kMaxBoard) {
        throw ConfigError("board size must be in [" + std::to_string(kMinBoard) + ", " +
                          std::to_string(kMaxBoard) + "], got " + std::to_string(n));
    }
    if (depth < 1 || depth >= n) {
        throw ConfigError("depth must be in [1, n), got " + std::to_string(depth));
    }
}

std::uint32_t allowed_columns(int n, const QueensState& s) noexcept {
    const std::uint32_t full = (1u << n) - 1;
    const std::uint32_t low_half = (1u << (n / 2)) - 1;
    if (s.row == 0) {
        return (n % 2 == 1) ? (low_half | (1u << (n / 2))) : low_half;
    }
    if (s.row == 1 && s.first_mid) {
        return low_half;
    }
    return full;
}

namespace {

QueensState place(int n, const QueensState& s, std::uint32_t bit) noexcept {
    QueensState next;
    next.cols = s.cols | bit;
    next.ld = (s.ld | bit) << 1;
    next.rd = (s.rd | bit) >> 1;
    next.row = s.row + 1;
    next.first_mid = s.row == 0 ? (n % 2 == 1 && bit == (1u << (n / 2))) : s.first_mid;
    return next;
}

std::uint64_t complete(int n, std::uint32_t full, std::uint32_t cols, std::uint32_t ld, std::uint32_t rd) noexcept {
    if (cols == full) {
        return 1;
    }
    std::uint64_t total = 0;
    std::uint32_t avail = ~(cols | ld | rd) & full;
    while (avail != 0) {
        const std::uint32_t bit = avail & (~avail + 1);
        avail ^= bit;
        total += complete(n, full, cols | bit, ((ld | bit) << 1) & full, (rd | bit) >> 1);
    }
    return total;
}

}  // namespace

std::uint64_t count_completions(int n, const QueensState& s) noexcept {
    const std::uint32_t full = (1u << n) - 1;
    if (s.row >= 2) {
        return complete(n, full, s.cols, s.ld & full, s.rd);
    }
    // the first two rows carry the half-board restrictions
    std::uint64_t total = 0;
    std::uint32_t avail = ~(s.cols | s.ld | s.rd) & allowed_columns(n, s);
    while (avail != 0) {
        const std::uint32_t bit = avail & (~avail + 1);
        avail ^= bit;
        total += count_completions(n, place(n, s, bit));
    }
    return total;
}

std::uint64_t nqueens_seq(int n) {
    check_nqueens_args(n, 1);
    return 2 * count_completions(n, QueensState{});
}

namespace {

void enumerate(int n, int prefix, const QueensState& s, std::vector<QueensState>& out) {
    if (s.row == prefix) {
        out.push_back(s);
        return;
    }
    const std::uint32_t full = (1u << n) - 1;
    std::uint32_t avail = ~(s.cols | s.ld | s.rd) & allowed_columns(n, s) & full;
    while (avail != 0) {
        const std::uint32_t bit = avail & (~avail + 1);
        avail ^= bit;
        QueensState next = place(n, s, bit);
        next.ld &= full;
        enumerate(n, prefix, next, out);
    }
}

class QueensWorker final : public Node {
public:
    explicit QueensWorker(int n) : n_(n) {}

    std::optional<Payload> svc(Payload task) override {
        count_ += count_completions(n_, *from_payload<const QueensState>(task));
        return std::nullopt;
    }

    const std::uint64_t* counter() const noexcept { return &count_; }

private:
    int n_;
    std::uint64_t count_ = 0;
};

}  // namespace

std::vector<QueensState> nqueens_tasks(int n, int depth) {
    check_nqueens_args(n, depth);
    std::vector<QueensState> out;
    enumerate(n, depth - 1, QueensState{}, out);
    return out;
}

NQueensOffload::NQueensOffload(int n, int depth, int n_workers, AcceleratorConfig cfg)
    : n_(n), tasks_(nqueens_tasks(n, depth)), counters_(std::make_shared<std::vector<const std::uint64_t*>>()) {
    auto counters = counters_;
    NodeFactory factory = [n, counters] {
        auto w = std::make_unique<QueensWorker>(n);
        counters->push_back(w->counter());
        return w;
    };
    cfg.blocking_offload = true;
    acc_ = std::make_unique<Accelerator>(SkeletonGraph::farm(factory, n_workers, false), cfg);
}

NQueensOffload::~NQueensOffload() = default;

NQueensResult NQueensOffload::solve() {
    acc_->run();
    for (auto& t : tasks_) {
        acc_->offload(to_payload(&t));
    }
    acc_->offload_eos();
    NQueensResult r;
    r.report = acc_->wait();
    r.tasks = tasks_.size();
    std::uint64_t half = 0;
    for (const std::uint64_t* c : *counters_) {
        half += *c;
    }
    r.solutions = 2 * half;
    return r;
}

NQueensResult nqueens_acc(int n, int depth, int n_workers, AcceleratorConfig cfg) {
    NQueensOffload job(n, depth, n_workers, std::move(cfg));
    return job.solve();
}

}  // namespace spareflow::bench
