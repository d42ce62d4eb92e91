#pragma once

#include "splatsim/scene.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace splatsim {

inline constexpr int kTileSize = 16;
inline constexpr double kDefaultBlur = 0.3;  // px^2 added to the 2D covariance diagonal

// The 9-parameter record the rasterizer consumes (mean, stored conic, opacity, RGB),
// plus depth, which lives in the separate depth buffer.
//
// Conic convention: with a = Vyy/det, b = Vxx/det, c = Vxy/det the exponent is
//   E = -1/2 a dx^2 - 1/2 b dy^2 + c dx dy = -1/2 d^T inv(cov2d) d
// and the record stores (-1/2 a, -1/2 b, c) directly.
struct ProjectedGaussian {
    std::uint32_t id = 0;
    double mean_x = 0.0, mean_y = 0.0;
    double neg_half_a = 0.0, neg_half_b = 0.0, c = 0.0;
    double opacity = 0.0;
    std::array<double, 3> rgb{};
    double depth = 0.0;
    // 2D covariance (Vxx, Vxy, Vyy) after blur; kept for tile assignment and checks.
    std::array<double, 3> cov2d{};

    [[nodiscard]] double a() const { return -2.0 * neg_half_a; }
    [[nodiscard]] double b() const { return -2.0 * neg_half_b; }
    [[nodiscard]] double exponent(double dx, double dy) const {
        return neg_half_a * dx * dx + neg_half_b * dy * dy + c * dx * dy;
    }
    // Half-width of the 3-sigma bounding square.
    [[nodiscard]] double radius() const;
};

struct TileCoord {
    std::uint32_t tx = 0, ty = 0;
    friend bool operator==(TileCoord, TileCoord) = default;
    friend auto operator<=>(TileCoord, TileCoord) = default;
};

struct TileGeometry {
    std::uint32_t width = 0, height = 0;  // image size in pixels
    std::uint32_t tiles_x = 0, tiles_y = 0;

    static TileGeometry for_image(std::uint32_t width, std::uint32_t height);
    [[nodiscard]] std::size_t tile_count() const { return std::size_t(tiles_x) * tiles_y; }
    [[nodiscard]] std::size_t index(TileCoord t) const { return std::size_t(t.ty) * tiles_x + t.tx; }
};

// Per-tile lists of indices into ProjectionResult::gaussians. Gaussians are kept in
// ascending ID order, so index order is ID order.
struct TileGrid {
    TileGeometry geometry;
    std::vector<std::vector<std::uint32_t>> lists;

    [[nodiscard]] const std::vector<std::uint32_t>& list(TileCoord t) const { return lists[geometry.index(t)]; }
    [[nodiscard]] std::size_t total_entries() const;
};

struct ProjectionStats {
    std::size_t input = 0;
    std::size_t culled_near = 0;
    std::size_t degenerate = 0;
    std::size_t offscreen = 0;  // projected but touching no tile
};

struct ProjectionResult {
    std::vector<ProjectedGaussian> gaussians;
    TileGrid grid;
    std::vector<std::uint32_t> tiles_touched;  // per projected Gaussian, unsaturated
    ProjectionStats stats;

    // The 4-bit importance stored next to each cache tag.
    [[nodiscard]] std::uint8_t importance(std::size_t index) const {
        return static_cast<std::uint8_t>(std::min<std::uint32_t>(15u, tiles_touched[index]));
    }
};

struct ProjectionOptions {
    int sh_degree = 3;
    double blur = kDefaultBlur;
};

// Sigma' = R S S^T R^T, S = diag(exp(log_scale)), R from the normalized quaternion (w,x,y,z).
[[nodiscard]] Eigen::Matrix3d covariance_3d(const Eigen::Vector3d& log_scale, const Eigen::Vector4d& quaternion);
[[nodiscard]] Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& unit_quaternion);

// Real SH evaluation up to `degree`, plus the +0.5 offset, clamped at zero.
[[nodiscard]] std::array<double, 3> eval_sh(const std::array<std::array<float, 3>, kShCoefficients>& sh,
                                            const Eigen::Vector3d& dir, int degree);
inline constexpr double kShC0 = 0.28209479177387814;

enum class ProjectOutcome : std::uint8_t { ok, culled, degenerate };

struct ProjectAttempt {
    ProjectOutcome outcome = ProjectOutcome::culled;
    std::optional<ProjectedGaussian> gaussian;
};

[[nodiscard]] ProjectAttempt try_project_gaussian(const Gaussian3D& g, std::uint32_t id, const Camera& cam,
                                                  const ProjectionOptions& options = {});
[[nodiscard]] std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, std::uint32_t id,
                                                                const Camera& cam,
                                                                const ProjectionOptions& options = {});

// Tiles whose pixel rectangle [16 tx, 16 tx + 16) x [16 ty, 16 ty + 16) meets the
// closed square of half-width radius() around the mean.
[[nodiscard]] std::vector<TileCoord> assign_tiles(const ProjectedGaussian& pg, const TileGeometry& geometry);

// Bins already-projected Gaussians (ascending ID) into a grid.
[[nodiscard]] ProjectionResult bin_gaussians(std::vector<ProjectedGaussian> gaussians, const TileGeometry& geometry);

[[nodiscard]] ProjectionResult project_scene(const Scene& scene, const Camera& cam,
                                             const ProjectionOptions& options = {});

} // namespace splatsim
