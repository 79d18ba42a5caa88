#include "spareflow/bench/mandel.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace spareflow::bench {

const char* region_name(Region r) noexcept {
    switch (r) {
    case Region::base:
        return "base";
    case Region::wreath:
        return "wreath";
    case Region::two_helix:
        return "two_helix";
    case Region::broccoli:
        return "broccoli";
    }
    return "unknown";
}

std::optional<Region> parse_region(std::string_view name) noexcept {
    for (Region r : kAllRegions) {
        if (name == region_name(r)) {
            return r;
        }
    }
    return std::nullopt;
}

RegionRect region_rect(Region r) noexcept {
    switch (r) {
    case Region::base:
        return {-2.0, 1.0, -1.5, 1.5};
    case Region::wreath:
        return {-0.7530, -0.7430, 0.1000, 0.1100};
    case Region::two_helix:
        return {-0.7460, -0.7420, 0.1100, 0.1140};
    case Region::broccoli:
        return {-1.8000, -1.7600, 0.0500, 0.0900};
    }
    return {-2.0, 1.0, -1.5, 1.5};
}

std::uint32_t escape_iterations(double cr, double ci, std::uint32_t max_iter) noexcept {
    double zr = 0.0;
    double zi = 0.0;
    for (std::uint32_t k = 1; k <= max_iter; ++k) {
        const double zr2 = zr * zr;
        const double zi2 = zi * zi;
        const double nzr = zr2 - zi2 + cr;
        zi = 2.0 * zr * zi + ci;
        zr = nzr;
        if (zr * zr + zi * zi > 4.0) {
            return k;
        }
    }
    return max_iter;
}

std::uint32_t pass_iteration_limit(int pass) noexcept {
    return 256u << (std::max(pass, 1) - 1);
}

void render_row(const RegionRect& rect, std::size_t size, std::uint32_t max_iter, std::size_t row,
                std::uint32_t* out) noexcept {
    const double dx = (rect.x_max - rect.x_min) / static_cast<double>(size);
    const double dy = (rect.y_max - rect.y_min) / static_cast<double>(size);
    const double ci = rect.y_max - dy * static_cast<double>(row);
    for (std::size_t col = 0; col < size; ++col) {
        const double cr = rect.x_min + dx * static_cast<double>(col);
        out[col] = escape_iterations(cr, ci, max_iter);
    }
}

Pixmap mandel_render_pass_seq(Region region, std::size_t size, int pass) {
    const RegionRect rect = region_rect(region);
    const std::uint32_t limit = pass_iteration_limit(pass);
    Pixmap pixels(size * size);
    for (std::size_t row = 0; row < size; ++row) {
        render_row(rect, size, limit, row, &pixels[row * size]);
    }
    return pixels;
}

std::vector<Pixmap> mandel_render_seq(Region region, std::size_t size, int passes) {
    std::vector<Pixmap> out;
    for (int pass = 1; pass <= passes; ++pass) {
        out.push_back(mandel_render_pass_seq(region, size, pass));
    }
    return out;
}

MandelRenderer::MandelRenderer(std::size_t size, int n_workers, AcceleratorConfig cfg)
    : size_(size), tasks_(size) {
    if (size == 0) {
        throw std::invalid_argument("pixmap size must be positive");
    }
    struct Worker final : Node {
        std::optional<Payload> svc(Payload task) override {
            const auto* t = from_payload<const RowTask>(task);
            render_row(t->rect, t->size, t->max_iter, t->row, t->pixels + t->row * t->size);
            return std::nullopt;
        }
    };
    cfg.blocking_offload = true;
    acc_ = std::make_unique<Accelerator>(
        SkeletonGraph::farm([] { return std::make_unique<Worker>(); }, n_workers, false), cfg);
}

MandelRenderer::~MandelRenderer() = default;

Pixmap MandelRenderer::render_pass(Region region, int pass) {
    Pixmap pixels(size_ * size_);
    const RegionRect rect = region_rect(region);
    const std::uint32_t limit = pass_iteration_limit(pass);
    acc_->run_then_freeze();
    for (std::size_t row = 0; row < size_; ++row) {
        // each task carries its own copy of the loop variables
        tasks_[row] = RowTask{row, limit, rect, size_, pixels.data()};
        acc_->offload(to_payload(&tasks_[row]));
    }
    acc_->offload_eos();
    acc_->wait_freezing();
    return pixels;
}

std::vector<Pixmap> MandelRenderer::render(Region region, int passes) {
    std::vector<Pixmap> out;
    for (int pass = 1; pass <= passes; ++pass) {
        out.push_back(render_pass(region, pass));
    }
    return out;
}

std::vector<Pixmap> mandel_render_acc(Region region, std::size_t size, int passes, int n_workers,
                                      AcceleratorConfig cfg) {
    MandelRenderer renderer(size, n_workers, std::move(cfg));
    return renderer.render(region, passes);
}

void write_pgm(const Pixmap& pixels, std::size_t size, std::uint32_t max_iter, const char* path) {
    std::FILE* f = std::fopen(path, "wb");
    if (f == nullptr) {
        throw std::runtime_error(std::string("cannot open ") + path);
    }
    std::fprintf(f, "P5\n%zu %zu\n255\n", size, size);
    std::vector<unsigned char> bytes(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        bytes[i] = pixels[i] >= max_iter ? 0 : static_cast<unsigned char>(255 - (pixels[i] * 7) % 256);
    }
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
}

}  // namespace spareflow::bench
