#pragma once

#include "spareflow/bench/mandel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spareflow::bench {

enum class Suite { matmul, mandel, nqueens, spsc };
enum class Format { csv, markdown };

const char* suite_name(Suite s) noexcept;
std::optional<Suite> parse_suite(std::string_view name) noexcept;

struct BenchConfig {
    Suite suite = Suite::nqueens;
    std::size_t size = 0;  // 0 picks the suite default
    int n_workers = 4;
    std::size_t queue_capacity = 512;
    int depth = 4;
    int passes = 6;
    int repetitions = 5;
    Format format = Format::csv;
    Region region = Region::base;
    bool long_run = false;
    std::uint64_t seed = 42;
};

std::size_t default_size(Suite s) noexcept;

// Throws ConfigError on invalid values. Board sizes >= 18 need long_run.
void validate_config(const BenchConfig& cfg);

struct BenchResult {
    std::string benchmark;
    std::size_t size = 0;
    int workers = 0;
    std::vector<double> seq_times;  // seconds
    std::vector<double> acc_times;
    double seq_mean = 0.0;
    double acc_mean = 0.0;
    double speedup = 0.0;
    bool verified = false;
    std::string diff;  // mismatch summary when !verified
    std::vector<std::uint64_t> worker_tasks;
};

double mean(const std::vector<double>& xs);

// Verifies the accelerated variant against the sequential one first, then
// times cfg.repetitions runs of each. Timing is skipped when verification
// fails.
BenchResult run_bench(const BenchConfig& cfg);

std::string csv_field(std::string_view field);
std::string emit(const std::vector<BenchResult>& results, Format format);

// Streams 0..tokens-1 from a producer thread to a consumer thread and checks
// the order. Cores, when given, pin producer and consumer.
struct TransferResult {
    double seconds = 0.0;
    bool in_order = false;
};

TransferResult spsc_transfer(std::uint64_t tokens, std::size_t capacity,
                             std::optional<unsigned> producer_core = std::nullopt,
                             std::optional<unsigned> consumer_core = std::nullopt);
TransferResult locked_transfer(std::uint64_t tokens, std::size_t capacity,
                               std::optional<unsigned> producer_core = std::nullopt,
                               std::optional<unsigned> consumer_core = std::nullopt);

}  // namespace spareflow::bench
