#pragma once

#include "spareflow/accelerator.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace spareflow::bench {

inline constexpr int kMinBoard = 4;
inline constexpr int kMaxBoard = 24;

// Partial placement: queens on rows [0, row). Bit c of cols marks column c;
// ld/rd are the diagonals attacked on the next row.
//
// Only half of the board is searched and every solution is counted twice
// (its mirror image). The first queen stays in the low half of the columns;
// on odd boards it may also take the middle column, in which case the second
// queen is restricted to the low half instead.
struct QueensState {
    std::uint32_t cols = 0;
    std::uint32_t ld = 0;
    std::uint32_t rd = 0;
    int row = 0;
    bool first_mid = false;
};

// Throws ConfigError unless kMinBoard <= n <= kMaxBoard and 1 <= depth < n.
void check_nqueens_args(int n, int depth);

// Columns a queen may take on state.row, ignoring attacks.
std::uint32_t allowed_columns(int n, const QueensState& s) noexcept;

// Solutions (within the searched half) below a partial placement.
std::uint64_t count_completions(int n, const QueensState& s) noexcept;

std::uint64_t nqueens_seq(int n);

// Task stream for the accelerated solver: every legal placement of the
// first depth - 1 queens; the worker places queen number depth onwards.
std::vector<QueensState> nqueens_tasks(int n, int depth);

struct NQueensResult {
    std::uint64_t solutions = 0;
    std::size_t tasks = 0;
    RunReport report;
};

// Collector-less farm; workers keep a private running count, summed after
// wait(). Construction builds the task list and the accelerator; solve() is
// the timed part and may be called once.
class NQueensOffload {
public:
    NQueensOffload(int n, int depth, int n_workers, AcceleratorConfig cfg = {});
    ~NQueensOffload();

    NQueensResult solve();

private:
    int n_;
    std::vector<QueensState> tasks_;
    std::shared_ptr<std::vector<const std::uint64_t*>> counters_;
    std::unique_ptr<Accelerator> acc_;
};

NQueensResult nqueens_acc(int n, int depth, int n_workers, AcceleratorConfig cfg = {});

}  // namespace spareflow::bench
