#pragma once

#include "spareflow/accelerator.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace spareflow::bench {

// Dense row-major square matrix.
struct Matrix {
    std::size_t n = 0;
    std::vector<double> data;

    explicit Matrix(std::size_t size = 0) : n(size), data(size * size, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

Matrix identity_matrix(std::size_t n);
// Entries uniform in [-1, 1), deterministic in seed.
Matrix random_matrix(std::size_t n, std::uint64_t seed);

// Inputs for a seeded run: A = random(seed), B = random(seed + 1).
struct MatmulInputs {
    Matrix a;
    Matrix b;
};
MatmulInputs matmul_inputs(std::size_t n, std::uint64_t seed);

bool bit_identical(const Matrix& x, const Matrix& y);

Matrix matmul_seq(const Matrix& a, const Matrix& b);
Matrix matmul_seq(std::size_t n, std::uint64_t seed);

// Farm accelerator computing one output row per offloaded task. The
// accelerator is built in the constructor; compute() is the timed part
// (run, offload every row, EOS, wait) and may be called once.
class MatmulOffload {
public:
    MatmulOffload(const Matrix& a, const Matrix& b, int n_workers, AcceleratorConfig cfg = {});
    ~MatmulOffload();

    Matrix& compute();
    const RunReport& report() const noexcept { return report_; }

private:
    struct Task {
        std::size_t row;
    };

    const Matrix& a_;
    const Matrix& b_;
    Matrix c_;
    std::vector<Task> tasks_;
    std::unique_ptr<Accelerator> acc_;
    RunReport report_;
};

Matrix matmul_acc(const Matrix& a, const Matrix& b, int n_workers, AcceleratorConfig cfg = {});
Matrix matmul_acc(std::size_t n, std::uint64_t seed, int n_workers, AcceleratorConfig cfg = {});

}  // namespace spareflow::bench
