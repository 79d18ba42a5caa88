#include "spareflow/accelerator.hpp"
#include "spareflow/bench/harness.hpp"
#include "spareflow/bench/mandel.hpp"
#include "spareflow/bench/matmul.hpp"
#include "spareflow/bench/nqueens.hpp"
#include "spareflow/errors.hpp"
#include "spareflow/skeletons.hpp"
#include "spareflow/spsc.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>

namespace py = pybind11;
using namespace spareflow;
using namespace spareflow::bench;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({m.n, m.n});
    std::memcpy(out.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
    return out;
}

py::list to_numpy(const std::vector<Pixmap>& passes, std::size_t size) {
    py::list out;
    for (const auto& p : passes) {
        py::array_t<std::uint32_t> a({size, size});
        std::memcpy(a.mutable_data(), p.data(), p.size() * sizeof(std::uint32_t));
        out.append(std::move(a));
    }
    return out;
}

Region region_arg(const std::string& name) {
    auto r = parse_region(name);
    if (!r) {
        throw ConfigError("unknown region '" + name + "'");
    }
    return *r;
}

std::vector<std::uint64_t> identity_farm(const std::vector<std::uint64_t>& values, int n_workers,
                                         std::size_t queue_capacity) {
    AcceleratorConfig cfg;
    cfg.queue_capacity = queue_capacity;
    cfg.blocking_offload = false;
    Accelerator acc(SkeletonGraph::farm(node_factory([](Payload p) { return std::optional<Payload>(p); }),
                                        n_workers, true),
                    cfg);
    std::vector<std::uint64_t> out;
    acc.run();
    for (std::uint64_t v : values) {
        while (!acc.offload(v)) {
            while (auto r = acc.load_result()) {
                out.push_back(*r);
            }
        }
    }
    acc.offload_eos();
    while (auto r = acc.load_result_blocking()) {
        out.push_back(*r);
    }
    acc.wait();
    return out;
}

py::dict result_dict(const BenchResult& r) {
    py::dict d;
    d["benchmark"] = r.benchmark;
    d["size"] = r.size;
    d["workers"] = r.workers;
    d["seq_times"] = r.seq_times;
    d["acc_times"] = r.acc_times;
    d["seq_mean"] = r.seq_mean;
    d["acc_mean"] = r.acc_mean;
    d["speedup"] = r.speedup;
    d["verified"] = r.verified;
    d["diff"] = r.diff;
    d["worker_tasks"] = r.worker_tasks;
    return d;
}

}  // namespace

PYBIND11_MODULE(_spareflow, m) {
    m.doc() = "Streaming skeletons and self-offloading accelerator over lock-free SPSC queues";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
    py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);

    py::class_<SpscQueue<std::uint64_t>>(m, "SpscQueue")
        .def(py::init<std::size_t>(), py::arg("capacity"))
        .def("push", &SpscQueue<std::uint64_t>::push, py::arg("value"))
        .def("pop", &SpscQueue<std::uint64_t>::pop)
        .def("capacity", &SpscQueue<std::uint64_t>::capacity)
        .def("unsafe_len", &SpscQueue<std::uint64_t>::unsafe_len);

    m.def(
        "backoff_action",
        [](std::uint32_t spin, std::uint32_t yield, bool park, std::uint64_t attempt) {
            switch (backoff_action(BackoffPolicy{spin, yield, park}, attempt)) {
            case WaitAction::spin:
                return "spin";
            case WaitAction::yield:
                return "yield";
            case WaitAction::park:
                return "park";
            }
            return "yield";
        },
        py::arg("spin_budget"), py::arg("yield_budget"), py::arg("park_after"), py::arg("attempt"));

    m.def(
        "farm_plan",
        [](int n, bool with_collector) {
            auto plan = lower(SkeletonGraph::farm(node_factory([](Payload p) { return std::optional<Payload>(p); }),
                                                  n, with_collector),
                              8);
            py::dict d;
            d["threads"] = plan.threads.size();
            d["emitters"] = plan.count(Role::emitter);
            d["workers"] = plan.count(Role::worker);
            d["collectors"] = plan.count(Role::collector);
            d["internal_queues"] = plan.internal_queue_count();
            d["has_exit"] = plan.exit != nullptr;
            return d;
        },
        py::arg("n"), py::arg("with_collector") = true);

    m.def("identity_farm", &identity_farm, py::arg("values"), py::arg("n_workers") = 4,
          py::arg("queue_capacity") = 512, py::call_guard<py::gil_scoped_release>());

    m.def("nqueens_seq", &nqueens_seq, py::arg("n"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "nqueens_acc",
        [](int n, int depth, int n_workers) {
            NQueensResult r;
            {
                py::gil_scoped_release release;
                r = nqueens_acc(n, depth, n_workers);
            }
            py::dict d;
            d["solutions"] = r.solutions;
            d["tasks"] = r.tasks;
            d["worker_tasks"] = r.report.worker_tasks;
            return d;
        },
        py::arg("n"), py::arg("depth") = 4, py::arg("n_workers") = 4);
    m.def(
        "nqueens_task_count", [](int n, int depth) { return nqueens_tasks(n, depth).size(); }, py::arg("n"),
        py::arg("depth") = 4);

    m.def(
        "matmul_seq",
        [](std::size_t n, std::uint64_t seed) {
            Matrix c(0);
            {
                py::gil_scoped_release release;
                c = matmul_seq(n, seed);
            }
            return to_numpy(c);
        },
        py::arg("n"), py::arg("seed") = 42);
    m.def(
        "matmul_acc",
        [](std::size_t n, std::uint64_t seed, int n_workers) {
            Matrix c(0);
            {
                py::gil_scoped_release release;
                c = matmul_acc(n, seed, n_workers);
            }
            return to_numpy(c);
        },
        py::arg("n"), py::arg("seed") = 42, py::arg("n_workers") = 4);

    m.def("escape_iterations", &escape_iterations, py::arg("cr"), py::arg("ci"), py::arg("max_iter"));
    m.def("pass_iteration_limit", &pass_iteration_limit, py::arg("pass_"));
    m.def("regions", [] {
        std::vector<std::string> out;
        for (Region r : kAllRegions) {
            out.emplace_back(region_name(r));
        }
        return out;
    });
    m.def(
        "mandel_render_seq",
        [](const std::string& region, std::size_t size, int passes) {
            const Region r = region_arg(region);
            std::vector<Pixmap> out;
            {
                py::gil_scoped_release release;
                out = mandel_render_seq(r, size, passes);
            }
            return to_numpy(out, size);
        },
        py::arg("region"), py::arg("size"), py::arg("passes"));
    m.def(
        "mandel_render_acc",
        [](const std::string& region, std::size_t size, int passes, int n_workers) {
            const Region r = region_arg(region);
            std::vector<Pixmap> out;
            {
                py::gil_scoped_release release;
                out = mandel_render_acc(r, size, passes, n_workers);
            }
            return to_numpy(out, size);
        },
        py::arg("region"), py::arg("size"), py::arg("passes"), py::arg("n_workers") = 4);

    m.def(
        "run_bench",
        [](const std::string& suite, std::size_t size, int workers, std::size_t queue_cap, int depth, int passes,
           int reps, const std::string& region, bool long_run, std::uint64_t seed) {
            auto s = parse_suite(suite);
            if (!s) {
                throw ConfigError("unknown suite '" + suite + "'");
            }
            BenchConfig cfg;
            cfg.suite = *s;
            cfg.size = size;
            cfg.n_workers = workers;
            cfg.queue_capacity = queue_cap;
            cfg.depth = depth;
            cfg.passes = passes;
            cfg.repetitions = reps;
            cfg.region = region_arg(region);
            cfg.long_run = long_run;
            cfg.seed = seed;
            BenchResult r;
            {
                py::gil_scoped_release release;
                r = run_bench(cfg);
            }
            return result_dict(r);
        },
        py::arg("suite"), py::arg("size") = 0, py::arg("workers") = 4, py::arg("queue_cap") = 512,
        py::arg("depth") = 4, py::arg("passes") = 6, py::arg("reps") = 5, py::arg("region") = "base",
        py::arg("long_run") = false, py::arg("seed") = 42);

    m.def(
        "emit",
        [](const std::vector<py::dict>& rows, const std::string& format) {
            std::vector<BenchResult> results;
            for (const auto& d : rows) {
                BenchResult r;
                r.benchmark = d["benchmark"].cast<std::string>();
                r.size = d["size"].cast<std::size_t>();
                r.workers = d["workers"].cast<int>();
                r.seq_mean = d["seq_mean"].cast<double>();
                r.acc_mean = d["acc_mean"].cast<double>();
                r.speedup = d["speedup"].cast<double>();
                r.verified = d["verified"].cast<bool>();
                results.push_back(r);
            }
            return emit(results, format == "md" ? Format::markdown : Format::csv);
        },
        py::arg("results"), py::arg("format") = "csv");

    m.def("logical_core_count", &logical_core_count);
    m.def("physical_core_count", &physical_core_count);
}
