#pragma once

#include "spareflow/accelerator.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace spareflow::bench {

// Fixed complex-plane windows. base shows the whole set and gets more
// expensive with every pass; broccoli lies almost entirely outside the set
// and costs about the same on every pass.
enum class Region { base, wreath, two_helix, broccoli };

inline constexpr Region kAllRegions[] = {Region::base, Region::wreath, Region::two_helix, Region::broccoli};

struct RegionRect {
    double x_min;
    double x_max;
    double y_min;
    double y_max;
};

const char* region_name(Region r) noexcept;
std::optional<Region> parse_region(std::string_view name) noexcept;
RegionRect region_rect(Region r) noexcept;

// Escape time of c = cr + i*ci: first iteration k (1-based) with |z_k| > 2,
// or max_iter when the orbit stays bounded.
std::uint32_t escape_iterations(double cr, double ci, std::uint32_t max_iter) noexcept;

// Iteration limit of a 1-based refinement pass: 256, 512, 1024, ...
std::uint32_t pass_iteration_limit(int pass) noexcept;

using Pixmap = std::vector<std::uint32_t>;

void render_row(const RegionRect& rect, std::size_t size, std::uint32_t max_iter, std::size_t row,
                std::uint32_t* out) noexcept;

std::vector<Pixmap> mandel_render_seq(Region region, std::size_t size, int passes);
Pixmap mandel_render_pass_seq(Region region, std::size_t size, int pass);

// Farm accelerator created once and cycled with run_then_freeze for every
// pass; one task per pixmap row.
class MandelRenderer {
public:
    MandelRenderer(std::size_t size, int n_workers, AcceleratorConfig cfg = {});
    ~MandelRenderer();

    Pixmap render_pass(Region region, int pass);
    std::vector<Pixmap> render(Region region, int passes);

    Accelerator& accelerator() noexcept { return *acc_; }

private:
    struct RowTask {
        std::size_t row;
        std::uint32_t max_iter;
        RegionRect rect;
        std::size_t size;
        std::uint32_t* pixels;
    };

    std::size_t size_;
    std::vector<RowTask> tasks_;
    std::unique_ptr<Accelerator> acc_;
};

std::vector<Pixmap> mandel_render_acc(Region region, std::size_t size, int passes, int n_workers,
                                      AcceleratorConfig cfg = {});

// Binary PGM (P5) of one pass, for debugging.
void write_pgm(const Pixmap& pixels, std::size_t size, std::uint32_t max_iter, const char* path);

}  // namespace spareflow::bench
