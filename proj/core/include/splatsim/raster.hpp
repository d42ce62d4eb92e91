#pragma once

#include "splatsim/fp16.hpp"
#include "splatsim/image.hpp"
#include "splatsim/projection.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace splatsim {

struct OpTally {
    std::uint64_t mul = 0, add = 0, exp = 0, div = 0, cmp = 0;

    [[nodiscard]] std::uint64_t mac() const { return mul + add; }
    OpTally& operator+=(const OpTally& o) {
        mul += o.mul; add += o.add; exp += o.exp; div += o.div; cmp += o.cmp;
        return *this;
    }
    friend OpTally operator+(OpTally a, const OpTally& b) { return a += b; }
    friend bool operator==(const OpTally&, const OpTally&) = default;
};

// Counters grouped by phase. "axis_lines" is the X-PE/Y-PE preprocessing of
// axis-oriented rasterization; "alpha" is the per-pixel work.
struct OpCounts {
    OpTally alpha, blending, axis_lines;

    [[nodiscard]] OpTally total() const { return alpha + blending + axis_lines; }
    OpCounts& operator+=(const OpCounts& o) {
        alpha += o.alpha; blending += o.blending; axis_lines += o.axis_lines;
        return *this;
    }
    friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

// Reference-rasterizer thresholds; none of them are fixed by the hardware.
struct RasterParams {
    double alpha_cap = 0.99;
    double alpha_skip = 1.0 / 255.0;
    double t_stop = 1e-4;
    std::array<double, 3> background{0.0, 0.0, 0.0};
    bool checked = true;  // verify depth order in sorted blending
};

// ---------------------------------------------------------------------------
// alpha computation
// ---------------------------------------------------------------------------

// Expanded conic form, 8 mul + 4 add + 1 exp (+1 cmp for the cap).
[[nodiscard]] double alpha_naive(const ProjectedGaussian& pg, double px, double py, const Alu& alu, double alpha_cap,
                                 OpCounts& counts);

struct AxisTerms {
    std::array<double, kTileSize> xterm{};   // c * dx, per column
    std::array<double, kTileSize> x2term{};  // -1/2 a * dx^2, per column
    std::array<double, kTileSize> yterm{};   // dy, per row
    std::array<double, kTileSize> y2term{};  // -1/2 b * dy^2, per row
};

// X-PE and Y-PE lines for one Gaussian and one tile. Counters record the line units:
// each X-PE is charged 2 mul + 2 add, each Y-PE 2 mul + 1 add.
[[nodiscard]] AxisTerms axis_terms(const ProjectedGaussian& pg, std::uint32_t origin_x, std::uint32_t origin_y,
                                   const Alu& alu, OpCounts& counts);

using AlphaTile = std::array<double, kTileSize * kTileSize>;  // row-major, [row * 16 + col]

// Rasterization PE array: E = x2term + y2term + xterm * yterm, alpha = min(o exp(E), cap).
// 2 mul + 2 add + 1 exp (+1 cmp) per pixel.
[[nodiscard]] AlphaTile alpha_axis_tile(const ProjectedGaussian& pg, const AxisTerms& terms, const Alu& alu,
                                        double alpha_cap, OpCounts& counts);

// ---------------------------------------------------------------------------
// blending
// ---------------------------------------------------------------------------

struct Contribution {
    std::uint32_t id = 0;
    double depth = 0.0;
    double alpha = 0.0;
    std::array<double, 3> rgb{};
    double decay = 1.0;  // F(d); only used by weighted blending
};

// Front-to-back compositing state for one pixel.
class SortedAccumulator {
public:
    // Returns false once the pixel has terminated.
    bool add(double alpha, const std::array<double, 3>& rgb, const Alu& alu, const RasterParams& params,
             OpCounts& counts);
    [[nodiscard]] bool done() const { return done_; }
    [[nodiscard]] double transmittance() const { return transmittance_; }
    [[nodiscard]] std::array<double, 3> resolve(const Alu& alu, const RasterParams& params) const;

private:
    std::array<double, 3> color_{};
    double transmittance_ = 1.0;
    bool done_ = false;
};

// Front-to-back compositing of a depth-ordered list; blending cost 5 mul + 4 add per contributing Gaussian.
// Throws if `params.checked` and the list has a depth inversion (ties ordered by ID).
[[nodiscard]] std::array<double, 3> blend_sorted(std::span<const Contribution> ordered, const Alu& alu,
                                                 const RasterParams& params, OpCounts& counts);

// ---------------------------------------------------------------------------
// frame rendering
// ---------------------------------------------------------------------------

enum class BlendMode : std::uint8_t { sorted, weighted };
enum class AlphaPath : std::uint8_t { axis, naive };

struct RenderOptions {
    BlendMode mode = BlendMode::sorted;
    AlphaPath alpha_path = AlphaPath::axis;
    Arith arith = Arith::exact;
    RasterParams raster;
    unsigned threads = 0;
};

struct FrameStats {
    OpCounts ops;
    std::vector<std::uint32_t> tile_gaussian_counts;
    std::uint64_t gaussian_tile_pairs = 0;        // entries in the tile lists
    std::uint64_t gaussian_tile_evaluations = 0;  // alpha tiles actually computed
    std::uint64_t blended_contributions = 0;
    std::uint64_t zero_denominator_pixels = 0;
    ProjectionStats projection;
    AlphaPath alpha_path = AlphaPath::axis;

    // alpha-phase MAC saving relative to the naive 8 mul + 4 add per pixel.
    [[nodiscard]] double alpha_mac_reduction() const;
};

struct RenderResult {
    Image image;
    FrameStats stats;
};

// `decay` holds F(d) per projected Gaussian and is required in weighted mode.
[[nodiscard]] RenderResult render_frame(const ProjectionResult& projection, const RenderOptions& options,
                                        std::span<const double> decay = {});

// Rounds the rasterization record to the ALU's precision (the 9 FP16 features).
[[nodiscard]] ProjectedGaussian quantize(const ProjectedGaussian& pg, const Alu& alu);

} // namespace splatsim
