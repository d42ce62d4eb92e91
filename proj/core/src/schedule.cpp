#include "splatsim/schedule.hpp"

#include "splatsim/error.hpp"

#include <cstdlib>
#include <fstream>
#include <string>

namespace splatsim {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::raster: return "raster";
        case Scheme::s: return "s";
        case Scheme::z: return "z";
        case Scheme::pi: return "pi";
    }
    return "?";
}

Scheme parse_scheme(std::string_view name) {
    if (name == "raster") return Scheme::raster;
    if (name == "s") return Scheme::s;
    if (name == "z") return Scheme::z;
    if (name == "pi") return Scheme::pi;
    throw ConfigError("unknown trajectory '" + std::string(name) + "' (raster|s|z|pi)");
}

std::uint32_t morton_encode(std::uint32_t x, std::uint32_t y) {
    std::uint32_t code = 0;
    for (int b = 0; b < 16; ++b) {
        code |= ((x >> b) & 1u) << (2 * b);
        code |= ((y >> b) & 1u) << (2 * b + 1);
    }
    return code;
}

std::pair<std::uint32_t, std::uint32_t> morton_decode(std::uint32_t code) {
    std::uint32_t x = 0, y = 0;
    for (int b = 0; b < 16; ++b) {
        x |= ((code >> (2 * b)) & 1u) << b;
        y |= ((code >> (2 * b + 1)) & 1u) << b;
    }
    return {x, y};
}

namespace {

void require_power_of_two(std::uint32_t n) {
    if (n == 0 || (n & (n - 1)) != 0) throw Error("hilbert: order must be a power of two");
}

// Standard iterative mapping: runs from (0,0) to (n-1,0). Its first step is +y when
// log2(n) is odd (2, 8, 32...) and +x when it is even.
std::pair<std::uint32_t, std::uint32_t> d2xy_y_first(std::uint32_t n, std::uint64_t d) {
    std::uint64_t x = 0, y = 0, t = d;
    for (std::uint64_t s = 1; s < n; s *= 2) {
        const std::uint64_t rx = 1 & (t / 2);
        const std::uint64_t ry = 1 & (t ^ rx);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
    }
    return {std::uint32_t(x), std::uint32_t(y)};
}

std::uint64_t xy2d_y_first(std::uint32_t n, std::uint32_t xi, std::uint32_t yi) {
    std::uint64_t d = 0, x = xi, y = yi;
    for (std::uint64_t s = n / 2; s > 0; s /= 2) {
        const std::uint64_t rx = (x & s) > 0;
        const std::uint64_t ry = (y & s) > 0;
        d += s * s * ((3 * rx) ^ ry);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

} // namespace

std::pair<std::uint32_t, std::uint32_t> hilbert_index_to_xy(std::uint32_t n, std::uint64_t index,
                                                            HilbertOrientation orientation) {
    require_power_of_two(n);
    if (index >= std::uint64_t(n) * n) throw Error("hilbert: index out of range");
    auto [x, y] = d2xy_y_first(n, index);
    switch (orientation) {
        case HilbertOrientation::y_first: break;
        case HilbertOrientation::x_first: std::swap(x, y); break;
        case HilbertOrientation::y_first_mirrored: x = n - 1 - x; break;
        case HilbertOrientation::x_first_mirrored: std::swap(x, y); x = n - 1 - x; break;
    }
    return {x, y};
}

std::uint64_t hilbert_xy_to_index(std::uint32_t n, std::uint32_t x, std::uint32_t y,
                                  HilbertOrientation orientation) {
    require_power_of_two(n);
    if (x >= n || y >= n) throw Error("hilbert: coordinate out of range");
    switch (orientation) {
        case HilbertOrientation::y_first: break;
        case HilbertOrientation::x_first: std::swap(x, y); break;
        case HilbertOrientation::y_first_mirrored: x = n - 1 - x; break;
        case HilbertOrientation::x_first_mirrored: x = n - 1 - x; std::swap(x, y); break;
    }
    return xy2d_y_first(n, x, y);
}

bool Trajectory::is_permutation() const {
    if (order.size() != std::size_t(tiles_x) * tiles_y) return false;
    std::vector<bool> seen(order.size(), false);
    for (const TileCoord t : order) {
        if (t.tx >= tiles_x || t.ty >= tiles_y) return false;
        const std::size_t i = std::size_t(t.ty) * tiles_x + t.tx;
        if (seen[i]) return false;
        seen[i] = true;
    }
    return true;
}

double Trajectory::mean_step_length() const {
    if (order.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) {
        total += std::abs(int(order[i].tx) - int(order[i - 1].tx)) + std::abs(int(order[i].ty) - int(order[i - 1].ty));
    }
    return total / double(order.size() - 1);
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "step,tx,ty\n";
    for (std::size_t i = 0; i < order.size(); ++i) out << i << ',' << order[i].tx << ',' << order[i].ty << '\n';
}

namespace {

// Boustrophedon over the rectangle [x0, x1) x [y0, y1), first row left to right.
void append_s(std::vector<TileCoord>& out, std::uint32_t x0, std::uint32_t x1, std::uint32_t y0, std::uint32_t y1) {
    for (std::uint32_t y = y0; y < y1; ++y) {
        const bool forward = (y - y0) % 2 == 0;
        for (std::uint32_t i = 0; i < x1 - x0; ++i) out.push_back({forward ? x0 + i : x1 - 1 - i, y});
    }
}

std::vector<TileCoord> pi_order(std::uint32_t tiles_x, std::uint32_t tiles_y, std::uint32_t block) {
    require_power_of_two(block);
    std::vector<TileCoord> out;
    out.reserve(std::size_t(tiles_x) * tiles_y);
    const std::uint32_t bx = tiles_x / block, by = tiles_y / block;
    const std::uint64_t cells = std::uint64_t(block) * block;
    for (std::uint32_t row = 0; row < by; ++row) {
        const bool forward = row % 2 == 0;
        // Forward rows run curves that exit at the block's right edge; reversed rows
        // use the mirror image so each exit abuts the next block.
        const auto orient = forward ? HilbertOrientation::y_first : HilbertOrientation::y_first_mirrored;
        for (std::uint32_t i = 0; i < bx; ++i) {
            const std::uint32_t col = forward ? i : bx - 1 - i;
            for (std::uint64_t d = 0; d < cells; ++d) {
                const auto [x, y] = hilbert_index_to_xy(block, d, orient);
                out.push_back({col * block + x, row * block + y});
            }
        }
    }
    append_s(out, 0, tiles_x, by * block, tiles_y);
    append_s(out, bx * block, tiles_x, 0, by * block);
    return out;
}

} // namespace

Trajectory make_trajectory(Scheme scheme, std::uint32_t tiles_x, std::uint32_t tiles_y,
                           const TrajectoryOptions& options) {
    if (tiles_x == 0 || tiles_y == 0) throw Error("trajectory: grid must be at least 1x1");
    Trajectory t;
    t.scheme = scheme;
    t.tiles_x = tiles_x;
    t.tiles_y = tiles_y;
    t.order.reserve(std::size_t(tiles_x) * tiles_y);
    switch (scheme) {
        case Scheme::raster:
            for (std::uint32_t y = 0; y < tiles_y; ++y)
                for (std::uint32_t x = 0; x < tiles_x; ++x) t.order.push_back({x, y});
            break;
        case Scheme::s: append_s(t.order, 0, tiles_x, 0, tiles_y); break;
        case Scheme::z: {
            std::uint32_t side = 1;
            while (side < tiles_x || side < tiles_y) side *= 2;
            for (std::uint64_t code = 0; code < std::uint64_t(side) * side; ++code) {
                const auto [x, y] = morton_decode(std::uint32_t(code));
                if (x < tiles_x && y < tiles_y) t.order.push_back({x, y});
            }
            break;
        }
        case Scheme::pi:
            if (options.column_major_blocks) {
                for (const TileCoord c : pi_order(tiles_y, tiles_x, options.pi_block)) t.order.push_back({c.ty, c.tx});
            } else {
                t.order = pi_order(tiles_x, tiles_y, options.pi_block);
            }
            break;
    }
    return t;
}

} // namespace splatsim
