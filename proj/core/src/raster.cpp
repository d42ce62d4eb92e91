#include "splatsim/raster.hpp"

#include "splatsim/error.hpp"
#include "splatsim/neuralsort.hpp"
#include "splatsim/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace splatsim {

double alpha_naive(const ProjectedGaussian& pg, double px, double py, const Alu& alu, double alpha_cap,
                   OpCounts& counts) {
    const double dx = alu.sub(px, pg.mean_x);
    const double dy = alu.sub(py, pg.mean_y);
    const double dx2 = alu.mul(dx, dx);
    const double dy2 = alu.mul(dy, dy);
    const double quad = alu.add(alu.mul(pg.a(), dx2), alu.mul(pg.b(), dy2));
    const double cross = alu.mul(alu.mul(pg.c, dx), dy);
    const double e = alu.add(alu.mul(-0.5, quad), cross);
    const double alpha = alu.mul(pg.opacity, alu.exp(e));
    counts.alpha.mul += 8;
    counts.alpha.add += 4;
    counts.alpha.exp += 1;
    counts.alpha.cmp += 1;
    return std::min(alpha, alpha_cap);
}

AxisTerms axis_terms(const ProjectedGaussian& pg, std::uint32_t origin_x, std::uint32_t origin_y, const Alu& alu,
                     OpCounts& counts) {
    AxisTerms t;
    // X-PE line: dx steps by one pixel per PE; the origin shifts by 16 per tile.
    for (int k = 0; k < kTileSize; ++k) {
        const double dx = alu.sub(double(origin_x + k), pg.mean_x);
        t.xterm[k] = alu.mul(pg.c, dx);
        t.x2term[k] = alu.mul(alu.mul(pg.neg_half_a, dx), dx);
    }
    // Y-PE line.
    for (int k = 0; k < kTileSize; ++k) {
        const double dy = alu.sub(double(origin_y + k), pg.mean_y);
        t.yterm[k] = dy;
        t.y2term[k] = alu.mul(alu.mul(pg.neg_half_b, dy), dy);
    }
    counts.axis_lines.mul += kTileSize * 2 + kTileSize * 2;
    counts.axis_lines.add += kTileSize * 2 + kTileSize * 1;
    return t;
}

AlphaTile alpha_axis_tile(const ProjectedGaussian& pg, const AxisTerms& terms, const Alu& alu, double alpha_cap,
                          OpCounts& counts) {
    AlphaTile out{};
    for (int row = 0; row < kTileSize; ++row) {
        for (int col = 0; col < kTileSize; ++col) {
            const double cross = alu.mul(terms.xterm[col], terms.yterm[row]);
            const double e = alu.add(alu.add(cross, terms.x2term[col]), terms.y2term[row]);
            out[row * kTileSize + col] = std::min(alu.mul(pg.opacity, alu.exp(e)), alpha_cap);
        }
    }
    constexpr std::uint64_t pixels = kTileSize * kTileSize;
    counts.alpha.mul += 2 * pixels;
    counts.alpha.add += 2 * pixels;
    counts.alpha.exp += pixels;
    counts.alpha.cmp += pixels;
    return out;
}

bool SortedAccumulator::add(double alpha, const std::array<double, 3>& rgb, const Alu& alu,
                            const RasterParams& params, OpCounts& counts) {
    if (done_) return false;
    if (alpha < params.alpha_skip) return true;
    const double w = alu.mul(transmittance_, alpha);
    for (int ch = 0; ch < 3; ++ch) color_[ch] = alu.add(color_[ch], alu.mul(w, rgb[ch]));
    transmittance_ = alu.mul(transmittance_, alu.sub(1.0, alpha));
    counts.blending.mul += 5;
    counts.blending.add += 4;
    counts.blending.cmp += 1;
    if (transmittance_ < params.t_stop) done_ = true;
    return !done_;
}

std::array<double, 3> SortedAccumulator::resolve(const Alu& alu, const RasterParams& params) const {
    std::array<double, 3> out = color_;
    for (int ch = 0; ch < 3; ++ch) {
        if (params.background[ch] != 0.0) out[ch] = alu.add(out[ch], alu.mul(transmittance_, params.background[ch]));
    }
    return out;
}

namespace {

bool depth_before(double da, std::uint32_t ia, double db, std::uint32_t ib) {
    return da < db || (da == db && ia < ib);
}

} // namespace

std::array<double, 3> blend_sorted(std::span<const Contribution> ordered, const Alu& alu,
                                   const RasterParams& params, OpCounts& counts) {
    if (params.checked) {
        for (std::size_t i = 1; i < ordered.size(); ++i) {
            if (!depth_before(ordered[i - 1].depth, ordered[i - 1].id, ordered[i].depth, ordered[i].id)) {
                throw Error("blend_sorted: depth inversion at position " + std::to_string(i));
            }
        }
    }
    SortedAccumulator acc;
    for (const Contribution& c : ordered) {
        if (!acc.add(c.alpha, c.rgb, alu, params, counts)) break;
    }
    return acc.resolve(alu, params);
}

ProjectedGaussian quantize(const ProjectedGaussian& pg, const Alu& alu) {
    ProjectedGaussian q = pg;
    q.mean_x = alu.in(pg.mean_x);
    q.mean_y = alu.in(pg.mean_y);
    q.neg_half_a = alu.in(pg.neg_half_a);
    q.neg_half_b = alu.in(pg.neg_half_b);
    q.c = alu.in(pg.c);
    q.opacity = alu.in(pg.opacity);
    for (double& v : q.rgb) v = alu.in(v);
    q.depth = alu.in(pg.depth);
    return q;
}

double FrameStats::alpha_mac_reduction() const {
    const std::uint64_t naive = gaussian_tile_evaluations * std::uint64_t(kTileSize * kTileSize) * 12;
    if (naive == 0) return 0.0;
    const std::uint64_t actual = ops.alpha.mac() + ops.axis_lines.mac();
    return 1.0 - double(actual) / double(naive);
}

namespace {

struct TileOutput {
    OpCounts ops;
    std::uint64_t evaluations = 0;
    std::uint64_t blended = 0;
    std::uint64_t zero_denominator = 0;
};

AlphaTile tile_alpha(const ProjectedGaussian& pg, std::uint32_t ox, std::uint32_t oy, const RenderOptions& options,
                     const Alu& alu, OpCounts& ops) {
    if (options.alpha_path == AlphaPath::axis) {
        const AxisTerms terms = axis_terms(pg, ox, oy, alu, ops);
        return alpha_axis_tile(pg, terms, alu, options.raster.alpha_cap, ops);
    }
    AlphaTile out{};
    for (int row = 0; row < kTileSize; ++row) {
        for (int col = 0; col < kTileSize; ++col) {
            out[row * kTileSize + col] =
                alpha_naive(pg, double(ox + col), double(oy + row), alu, options.raster.alpha_cap, ops);
        }
    }
    return out;
}

} // namespace

RenderResult render_frame(const ProjectionResult& projection, const RenderOptions& options,
                          std::span<const double> decay) {
    const TileGeometry& geo = projection.grid.geometry;
    const Alu alu(options.arith);
    const bool weighted = options.mode == BlendMode::weighted;
    if (weighted && decay.size() != projection.gaussians.size()) {
        throw ConfigError("render_frame: weighted mode needs one decay value per projected Gaussian (got " +
                          std::to_string(decay.size()) + ", expected " +
                          std::to_string(projection.gaussians.size()) + ")");
    }

    std::vector<ProjectedGaussian> records(projection.gaussians.size());
    std::vector<double> factors(weighted ? decay.size() : 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i] = quantize(projection.gaussians[i], alu);
        if (weighted) factors[i] = alu.in(decay[i]);
    }

    RenderResult result;
    result.image = Image(geo.width, geo.height);
    for (std::size_t i = 0; i < result.image.pixel_count(); ++i) {
        for (int ch = 0; ch < 3; ++ch) result.image.data[i * 3 + ch] = options.raster.background[ch];
    }

    std::vector<TileOutput> per_tile(geo.tile_count());
    parallel_for(geo.tile_count(), resolve_threads(options.threads), [&](std::size_t t) {
        TileOutput& out = per_tile[t];
        const TileCoord tc{std::uint32_t(t % geo.tiles_x), std::uint32_t(t / geo.tiles_x)};
        const std::uint32_t ox = tc.tx * kTileSize, oy = tc.ty * kTileSize;
        const std::uint32_t w = std::min<std::uint32_t>(kTileSize, geo.width - ox);
        const std::uint32_t h = std::min<std::uint32_t>(kTileSize, geo.height - oy);
        const auto& list = projection.grid.lists[t];
        if (list.empty()) return;

        if (!weighted) {
            std::vector<std::uint32_t> order(list.begin(), list.end());
            std::sort(order.begin(), order.end(), [&](std::uint32_t l, std::uint32_t r) {
                return depth_before(records[l].depth, records[l].id, records[r].depth, records[r].id);
            });
            std::array<SortedAccumulator, kTileSize * kTileSize> acc;
            std::size_t live = std::size_t(w) * h;
            for (std::uint32_t gi : order) {
                if (live == 0) break;
                const ProjectedGaussian& pg = records[gi];
                const AlphaTile alpha = tile_alpha(pg, ox, oy, options, alu, out.ops);
                ++out.evaluations;
                for (std::uint32_t row = 0; row < h; ++row) {
                    for (std::uint32_t col = 0; col < w; ++col) {
                        SortedAccumulator& a = acc[row * kTileSize + col];
                        if (a.done()) continue;
                        const double al = alpha[row * kTileSize + col];
                        if (al >= options.raster.alpha_skip) ++out.blended;
                        if (!a.add(al, pg.rgb, alu, options.raster, out.ops)) --live;
                    }
                }
            }
            for (std::uint32_t row = 0; row < h; ++row) {
                for (std::uint32_t col = 0; col < w; ++col) {
                    const auto rgb = acc[row * kTileSize + col].resolve(alu, options.raster);
                    for (int ch = 0; ch < 3; ++ch) result.image.at(ox + col, oy + row, ch) = rgb[ch];
                }
            }
            return;
        }

        std::array<WeightedAccumulator, kTileSize * kTileSize> acc;
        for (std::uint32_t gi : list) {
            const ProjectedGaussian& pg = records[gi];
            const AlphaTile alpha = tile_alpha(pg, ox, oy, options, alu, out.ops);
            ++out.evaluations;
            for (std::uint32_t row = 0; row < h; ++row) {
                for (std::uint32_t col = 0; col < w; ++col) {
                    const double al = alpha[row * kTileSize + col];
                    if (al < options.raster.alpha_skip) continue;
                    acc[row * kTileSize + col].add(al, pg.rgb, factors[gi], alu, out.ops);
                    ++out.blended;
                }
            }
        }
        for (std::uint32_t row = 0; row < h; ++row) {
            for (std::uint32_t col = 0; col < w; ++col) {
                const WeightedAccumulator& a = acc[row * kTileSize + col];
                if (a.empty()) {
                    ++out.zero_denominator;
                    continue;
                }
                const auto rgb = a.resolve(alu, out.ops);
                for (int ch = 0; ch < 3; ++ch) result.image.at(ox + col, oy + row, ch) = rgb[ch];
            }
        }
    });

    FrameStats& stats = result.stats;
    stats.alpha_path = options.alpha_path;
    stats.projection = projection.stats;
    stats.tile_gaussian_counts.reserve(geo.tile_count());
    for (std::size_t t = 0; t < geo.tile_count(); ++t) {
        stats.tile_gaussian_counts.push_back(std::uint32_t(projection.grid.lists[t].size()));
        stats.ops += per_tile[t].ops;
        stats.gaussian_tile_evaluations += per_tile[t].evaluations;
        stats.blended_contributions += per_tile[t].blended;
        stats.zero_denominator_pixels += per_tile[t].zero_denominator;
    }
    stats.gaussian_tile_pairs = projection.grid.total_entries();
    // Pixels of tiles with no Gaussians at all also have an empty weighted sum.
    if (weighted) {
        for (std::size_t t = 0; t < geo.tile_count(); ++t) {
            if (!projection.grid.lists[t].empty()) continue;
            const std::uint32_t ox = std::uint32_t(t % geo.tiles_x) * kTileSize;
            const std::uint32_t oy = std::uint32_t(t / geo.tiles_x) * kTileSize;
            stats.zero_denominator_pixels += std::uint64_t(std::min<std::uint32_t>(kTileSize, geo.width - ox)) *
                                             std::min<std::uint32_t>(kTileSize, geo.height - oy);
        }
    }
    for (double& v : result.image.data) v = std::clamp(v, 0.0, 1.0);
    return result;
}

} // namespace splatsim
