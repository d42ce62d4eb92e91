#pragma once

#include "splatsim/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

namespace splatsim {

enum class Scheme : std::uint8_t { raster, s, z, pi };

[[nodiscard]] std::string_view to_string(Scheme scheme);
[[nodiscard]] Scheme parse_scheme(std::string_view name);
inline constexpr Scheme kAllSchemes[] = {Scheme::raster, Scheme::s, Scheme::z, Scheme::pi};

// Interleaves y1y0 with x1x0 as y1 x1 y0 x0 (y in the higher bit of each pair).
[[nodiscard]] std::uint32_t morton_encode(std::uint32_t x, std::uint32_t y);
[[nodiscard]] std::pair<std::uint32_t, std::uint32_t> morton_decode(std::uint32_t code);

// Unmirrored curves start at (0,0). First steps as named hold for odd log2(n), which
// includes the 8x8 blocks of the pi schedule; for even log2(n) they swap.
//   x_first: first step +x, ends at (0, n-1)  (default)
//   y_first: first step +y, ends at (n-1, 0)
//   *_mirrored: x -> n-1-x, so the curve starts at (n-1, 0)
enum class HilbertOrientation : std::uint8_t { x_first, y_first, x_first_mirrored, y_first_mirrored };

[[nodiscard]] std::pair<std::uint32_t, std::uint32_t> hilbert_index_to_xy(
    std::uint32_t n, std::uint64_t index, HilbertOrientation orientation = HilbertOrientation::x_first);
[[nodiscard]] std::uint64_t hilbert_xy_to_index(std::uint32_t n, std::uint32_t x, std::uint32_t y,
                                                HilbertOrientation orientation = HilbertOrientation::x_first);

struct TrajectoryOptions {
    std::uint32_t pi_block = 8;
    bool column_major_blocks = false;  // block-level S order over columns instead of rows
};

struct Trajectory {
    Scheme scheme = Scheme::raster;
    std::uint32_t tiles_x = 0, tiles_y = 0;
    std::vector<TileCoord> order;

    [[nodiscard]] bool is_permutation() const;
    [[nodiscard]] double mean_step_length() const;  // Manhattan
    void write_csv(const std::filesystem::path& path) const;
};

[[nodiscard]] Trajectory make_trajectory(Scheme scheme, std::uint32_t tiles_x, std::uint32_t tiles_y,
                                         const TrajectoryOptions& options = {});

} // namespace splatsim
