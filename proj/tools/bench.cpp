// Benchmark and verification driver.
//
//   bench --suite {matmul|mandel|nqueens|spsc|all} --size N --workers K
//         --queue-cap Q --depth D --passes P --reps R --format {csv|md}
//         --out FILE [--long] [--region NAME|all] [--seed S] [--pgm DIR]
//
// Exit status: 0 when every run verified, 1 on a verification failure,
// 2 on a configuration error.

#include "spareflow/bench/harness.hpp"
#include "spareflow/bench/mandel.hpp"
#include "spareflow/errors.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace spareflow;
using namespace spareflow::bench;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;

void dump_pgms(const std::string& dir, const BenchConfig& cfg, std::size_t size) {
    std::filesystem::create_directories(dir);
    const auto passes = mandel_render_seq(cfg.region, size, cfg.passes);
    for (int p = 0; p < cfg.passes; ++p) {
        const std::string path =
            dir + "/" + region_name(cfg.region) + "_pass" + std::to_string(p + 1) + ".pgm";
        write_pgm(passes[static_cast<std::size_t>(p)], size, pass_iteration_limit(p + 1), path.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spareflow benchmark harness"};

    std::string suite = "nqueens";
    std::size_t size = 0;
    int workers = 4;
    std::size_t queue_cap = 512;
    int depth = 4;
    int passes = 6;
    int reps = 5;
    std::string format = "csv";
    std::string out_path;
    std::string region = "all";
    std::string pgm_dir;
    bool long_run = false;
    std::uint64_t seed = 42;

    app.add_option("--suite", suite, "matmul, mandel, nqueens, spsc or all")
        ->check(CLI::IsMember({"matmul", "mandel", "nqueens", "spsc", "all"}));
    app.add_option("--size", size, "problem size (matrix order, pixmap side, board size, token count)");
    app.add_option("--workers", workers, "farm workers");
    app.add_option("--queue-cap", queue_cap, "SPSC queue capacity");
    app.add_option("--depth", depth, "N-queens task depth (worker places queen D onwards)");
    app.add_option("--passes", passes, "Mandelbrot refinement passes");
    app.add_option("--reps", reps, "timed repetitions per variant");
    app.add_option("--format", format, "csv or md")->check(CLI::IsMember({"csv", "md"}));
    app.add_option("--out", out_path, "write the table to FILE instead of stdout");
    app.add_option("--region", region, "Mandelbrot region: base, wreath, two_helix, broccoli or all");
    app.add_option("--seed", seed, "matmul input seed");
    app.add_option("--pgm", pgm_dir, "also dump sequential Mandelbrot passes as PGM files into DIR");
    app.add_flag("--long", long_run, "allow board sizes >= 18");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::vector<Region> regions;
    if (region == "all") {
        regions.assign(std::begin(kAllRegions), std::end(kAllRegions));
    } else if (auto r = parse_region(region)) {
        regions.push_back(*r);
    } else {
        std::cerr << "error: unknown region '" << region << "'\n";
        return kExitConfig;
    }

    std::vector<Suite> suites;
    if (suite == "all") {
        suites = {Suite::matmul, Suite::mandel, Suite::nqueens, Suite::spsc};
    } else {
        suites.push_back(*parse_suite(suite));
    }

    std::vector<BenchConfig> configs;
    for (Suite s : suites) {
        BenchConfig cfg;
        cfg.suite = s;
        cfg.size = suite == "all" ? 0 : size;
        cfg.n_workers = workers;
        cfg.queue_capacity = queue_cap;
        cfg.depth = depth;
        cfg.passes = passes;
        cfg.repetitions = reps;
        cfg.format = format == "md" ? Format::markdown : Format::csv;
        cfg.long_run = long_run;
        cfg.seed = seed;
        if (s == Suite::mandel) {
            for (Region r : regions) {
                cfg.region = r;
                configs.push_back(cfg);
            }
        } else {
            configs.push_back(cfg);
        }
    }

    try {
        for (const auto& cfg : configs) {
            validate_config(cfg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::vector<BenchResult> results;
    for (const auto& cfg : configs) {
        std::cerr << "running " << suite_name(cfg.suite);
        if (cfg.suite == Suite::mandel) {
            std::cerr << "/" << region_name(cfg.region);
        }
        std::cerr << " ...\n";
        if (cfg.suite == Suite::mandel && !pgm_dir.empty()) {
            dump_pgms(pgm_dir, cfg, cfg.size == 0 ? default_size(cfg.suite) : cfg.size);
        }
        BenchResult r = run_bench(cfg);
        results.push_back(r);
        if (!r.verified) {
            std::cerr << "verification failed: " << r.diff << "\n";
            std::cout << emit(results, configs.front().format);
            return kExitVerifyFailed;
        }
    }

    const std::string table = emit(results, configs.front().format);
    if (out_path.empty()) {
        std::cout << table;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return kExitConfig;
        }
        out << table;
    }
    return 0;
}
