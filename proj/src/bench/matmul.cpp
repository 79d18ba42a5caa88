#include "spareflow/bench/matmul.hpp"

#include <cstring>
#include <random>

namespace spareflow::bench {

Matrix identity_matrix(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

Matrix random_matrix(std::size_t n, std::uint64_t seed) {
    Matrix m(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& x : m.data) {
        x = dist(rng);
    }
    return m;
}

MatmulInputs matmul_inputs(std::size_t n, std::uint64_t seed) {
    return {random_matrix(n, seed), random_matrix(n, seed + 1)};
}

bool bit_identical(const Matrix& x, const Matrix& y) {
    return x.n == y.n && std::memcmp(x.data.data(), y.data.data(), x.data.size() * sizeof(double)) == 0;
}

Matrix matmul_seq(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.n;
    Matrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a.at(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                c.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return c;
}

Matrix matmul_seq(std::size_t n, std::uint64_t seed) {
    const auto in = matmul_inputs(n, seed);
    return matmul_seq(in.a, in.b);
}

namespace {

// Reads A and B (shared, read-only), writes row i of C (single assignment).
class RowWorker final : public Node {
public:
    RowWorker(const Matrix& a, const Matrix& b, Matrix& c) : a_(a), b_(b), c_(c) {}

    std::optional<Payload> svc(Payload task) override {
        const std::size_t i = *from_payload<const std::size_t>(task);
        const std::size_t n = a_.n;
        double* row = &c_.data[i * n];
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a_.at(i, k);
            const double* brow = &b_.data[k * n];
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += aik * brow[j];
            }
        }
        return std::nullopt;
    }

private:
    const Matrix& a_;
    const Matrix& b_;
    Matrix& c_;
};

}  // namespace

MatmulOffload::MatmulOffload(const Matrix& a, const Matrix& b, int n_workers, AcceleratorConfig cfg)
    : a_(a), b_(b), c_(a.n) {
    tasks_.reserve(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
        tasks_.push_back({i});
    }
    const Matrix* pa = &a_;
    const Matrix* pb = &b_;
    Matrix* pc = &c_;
    NodeFactory factory = [pa, pb, pc] { return std::make_unique<RowWorker>(*pa, *pb, *pc); };
    cfg.blocking_offload = true;
    acc_ = std::make_unique<Accelerator>(SkeletonGraph::farm(factory, n_workers, false), cfg);
}

MatmulOffload::~MatmulOffload() = default;

Matrix& MatmulOffload::compute() {
    acc_->run();
    for (auto& t : tasks_) {
        acc_->offload(to_payload(&t.row));
    }
    acc_->offload_eos();
    report_ = acc_->wait();
    return c_;
}

Matrix matmul_acc(const Matrix& a, const Matrix& b, int n_workers, AcceleratorConfig cfg) {
    MatmulOffload job(a, b, n_workers, std::move(cfg));
    return std::move(job.compute());
}

Matrix matmul_acc(std::size_t n, std::uint64_t seed, int n_workers, AcceleratorConfig cfg) {
    const auto in = matmul_inputs(n, seed);
    return matmul_acc(in.a, in.b, n_workers, std::move(cfg));
}

}  // namespace spareflow::bench
