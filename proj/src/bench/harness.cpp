#include "spareflow/bench/harness.hpp"

#include "spareflow/bench/locked_queue.hpp"
#include "spareflow/bench/matmul.hpp"
#include "spareflow/bench/nqueens.hpp"
#include "spareflow/errors.hpp"
#include "spareflow/spsc.hpp"

#include <fmt/format.h>

#include <chrono>
#include <numeric>

namespace spareflow::bench {

const char* suite_name(Suite s) noexcept {
    switch (s) {
    case Suite::matmul:
        return "matmul";
    case Suite::mandel:
        return "mandel";
    case Suite::nqueens:
        return "nqueens";
    case Suite::spsc:
        return "spsc";
    }
    return "unknown";
}

std::optional<Suite> parse_suite(std::string_view name) noexcept {
    for (Suite s : {Suite::matmul, Suite::mandel, Suite::nqueens, Suite::spsc}) {
        if (name == suite_name(s)) {
            return s;
        }
    }
    return std::nullopt;
}

std::size_t default_size(Suite s) noexcept {
    switch (s) {
    case Suite::matmul:
    case Suite::mandel:
        return 512;
    case Suite::nqueens:
        return 12;
    case Suite::spsc:
        return 1'000'000;
    }
    return 1;
}

void validate_config(const BenchConfig& cfg) {
    if (cfg.repetitions < 1) {
        throw ConfigError("repetitions must be at least 1");
    }
    if (cfg.n_workers < 1) {
        throw ConfigError("workers must be at least 1");
    }
    if (cfg.queue_capacity <= 1) {
        throw ConfigError("queue capacity must be greater than 1");
    }
    if (cfg.passes < 1) {
        throw ConfigError("passes must be at least 1");
    }
    if (cfg.passes > 20) {
        throw ConfigError("passes must be at most 20");
    }
    const std::size_t size = cfg.size == 0 ? default_size(cfg.suite) : cfg.size;
    if (cfg.suite == Suite::nqueens) {
        check_nqueens_args(static_cast<int>(size), cfg.depth);
        if (size >= 18 && !cfg.long_run) {
            throw ConfigError("board sizes >= 18 require --long");
        }
    }
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) {
        return 0.0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_it(F&& f) {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

AcceleratorConfig acc_config(const BenchConfig& cfg) {
    AcceleratorConfig a;
    a.queue_capacity = cfg.queue_capacity;
    a.blocking_offload = true;
    return a;
}

void bench_matmul(const BenchConfig& cfg, std::size_t n, BenchResult& r) {
    const auto in = matmul_inputs(n, cfg.seed);
    const Matrix expected = matmul_seq(in.a, in.b);
    const Matrix got = matmul_acc(in.a, in.b, cfg.n_workers, acc_config(cfg));
    if (!bit_identical(expected, got)) {
        std::size_t mismatches = 0;
        std::size_t first = expected.data.size();
        for (std::size_t i = 0; i < expected.data.size(); ++i) {
            if (expected.data[i] != got.data[i]) {
                first = std::min(first, i);
                ++mismatches;
            }
        }
        r.diff = fmt::format("matmul: {} of {} elements differ, first at ({}, {})", mismatches,
                             expected.data.size(), first / n, first % n);
        return;
    }
    r.verified = true;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.seq_times.push_back(time_it([&] { (void)matmul_seq(in.a, in.b); }));
    }
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        MatmulOffload job(in.a, in.b, cfg.n_workers, acc_config(cfg));
        r.acc_times.push_back(time_it([&] { job.compute(); }));
        r.worker_tasks = job.report().worker_tasks;
    }
}

void bench_mandel(const BenchConfig& cfg, std::size_t size, BenchResult& r) {
    MandelRenderer renderer(size, cfg.n_workers, acc_config(cfg));
    const auto expected = mandel_render_seq(cfg.region, size, cfg.passes);
    const auto got = renderer.render(cfg.region, cfg.passes);
    for (int pass = 0; pass < cfg.passes; ++pass) {
        const auto& e = expected[static_cast<std::size_t>(pass)];
        const auto& g = got[static_cast<std::size_t>(pass)];
        if (e != g) {
            std::size_t first = 0;
            while (first < e.size() && e[first] == g[first]) {
                ++first;
            }
            r.diff = fmt::format("mandel/{}: pass {} differs, first pixel ({}, {})",
                                 region_name(cfg.region), pass + 1, first / size, first % size);
            return;
        }
    }
    r.verified = true;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.seq_times.push_back(time_it([&] { (void)mandel_render_seq(cfg.region, size, cfg.passes); }));
    }
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.acc_times.push_back(time_it([&] { (void)renderer.render(cfg.region, cfg.passes); }));
    }
    r.worker_tasks = renderer.accelerator().report().worker_tasks;
}

void bench_nqueens(const BenchConfig& cfg, int n, BenchResult& r) {
    const std::uint64_t expected = nqueens_seq(n);
    const auto got = nqueens_acc(n, cfg.depth, cfg.n_workers, acc_config(cfg));
    if (got.solutions != expected) {
        r.diff = fmt::format("nqueens {}: sequential {} solutions, accelerated {}", n, expected,
                             got.solutions);
        return;
    }
    r.verified = true;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.seq_times.push_back(time_it([&] { (void)nqueens_seq(n); }));
    }
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        NQueensOffload job(n, cfg.depth, cfg.n_workers, acc_config(cfg));
        NQueensResult res;
        r.acc_times.push_back(time_it([&] { res = job.solve(); }));
        r.worker_tasks = res.report.worker_tasks;
    }
}

// seq = mutex/condvar queue, acc = lock-free SPSC queue
void bench_spsc(const BenchConfig& cfg, std::size_t tokens, BenchResult& r) {
    const auto cores = distinct_physical_cores();
    std::optional<unsigned> prod;
    std::optional<unsigned> cons;
    if (cores.size() >= 2) {
        prod = cores[0];
        cons = cores[1];
    }
    const auto locked = locked_transfer(tokens, cfg.queue_capacity, prod, cons);
    const auto lockfree = spsc_transfer(tokens, cfg.queue_capacity, prod, cons);
    if (!locked.in_order || !lockfree.in_order) {
        r.diff = fmt::format("spsc: order violated (locked {}, lock-free {})", locked.in_order,
                             lockfree.in_order);
        return;
    }
    r.verified = true;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.seq_times.push_back(locked_transfer(tokens, cfg.queue_capacity, prod, cons).seconds);
    }
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        r.acc_times.push_back(spsc_transfer(tokens, cfg.queue_capacity, prod, cons).seconds);
    }
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
    validate_config(cfg);
    const std::size_t size = cfg.size == 0 ? default_size(cfg.suite) : cfg.size;
    BenchResult r;
    r.size = size;
    r.workers = cfg.suite == Suite::spsc ? 1 : cfg.n_workers;
    r.benchmark = suite_name(cfg.suite);
    switch (cfg.suite) {
    case Suite::matmul:
        bench_matmul(cfg, size, r);
        break;
    case Suite::mandel:
        r.benchmark += std::string("/") + region_name(cfg.region);
        bench_mandel(cfg, size, r);
        break;
    case Suite::nqueens:
        bench_nqueens(cfg, static_cast<int>(size), r);
        break;
    case Suite::spsc:
        bench_spsc(cfg, size, r);
        break;
    }
    r.seq_mean = mean(r.seq_times);
    r.acc_mean = mean(r.acc_times);
    r.speedup = r.acc_mean > 0.0 ? r.seq_mean / r.acc_mean : 0.0;
    return r;
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string emit(const std::vector<BenchResult>& results, Format format) {
    std::string out;
    if (format == Format::csv) {
        out += "benchmark,size,workers,seq_mean,acc_mean,speedup,verified\r\n";
        for (const auto& r : results) {
            out += fmt::format("{},{},{},{:.6f},{:.6f},{:.3f},{}\r\n", csv_field(r.benchmark), r.size,
                               r.workers, r.seq_mean, r.acc_mean, r.speedup, r.verified ? "true" : "false");
        }
        return out;
    }
    out += "| benchmark | size | workers | seq_mean (s) | acc_mean (s) | speedup | verified |\n";
    out += "|---|---:|---:|---:|---:|---:|---|\n";
    for (const auto& r : results) {
        out += fmt::format("| {} | {} | {} | {:.6f} | {:.6f} | {:.3f} | {} |\n", r.benchmark, r.size,
                           r.workers, r.seq_mean, r.acc_mean, r.speedup, r.verified ? "yes" : "no");
    }
    return out;
}

namespace {

template <typename Producer, typename Consumer>
TransferResult transfer(std::uint64_t tokens, std::optional<unsigned> producer_core,
                        std::optional<unsigned> consumer_core, Producer produce, Consumer consume) {
    TransferResult r;
    bool in_order = true;
    const auto t0 = Clock::now();
    {
        PinnedThread consumer = spawn_pinned(
            [&] {
                for (std::uint64_t expected = 0; expected < tokens; ++expected) {
                    if (consume() != expected) {
                        in_order = false;
                    }
                }
            },
            consumer_core);
        PinnedThread producer = spawn_pinned(
            [&] {
                for (std::uint64_t i = 0; i < tokens; ++i) {
                    produce(i);
                }
            },
            producer_core);
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.in_order = in_order;
    return r;
}

}  // namespace

TransferResult spsc_transfer(std::uint64_t tokens, std::size_t capacity,
                             std::optional<unsigned> producer_core, std::optional<unsigned> consumer_core) {
    SpscQueue<std::uint64_t> q(capacity);
    const BackoffPolicy policy = default_backoff();
    return transfer(
        tokens, producer_core, consumer_core,
        [&](std::uint64_t v) {
            Backoff b(policy);
            while (!q.push(v)) {
                b.pause();
            }
        },
        [&] {
            Backoff b(policy);
            for (;;) {
                if (auto v = q.pop()) {
                    return *v;
                }
                b.pause();
            }
        });
}

TransferResult locked_transfer(std::uint64_t tokens, std::size_t capacity,
                               std::optional<unsigned> producer_core, std::optional<unsigned> consumer_core) {
    LockedQueue<std::uint64_t> q(capacity);
    return transfer(
        tokens, producer_core, consumer_core, [&](std::uint64_t v) { q.push(v); }, [&] { return q.pop(); });
}

}  // namespace spareflow::bench
