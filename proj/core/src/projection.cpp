#include "splatsim/projection.hpp"

#include "splatsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace splatsim {

namespace {

constexpr double kShC1 = 0.4886025119029199;
constexpr double kShC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                            0.5462742152960396};
constexpr double kShC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

} // namespace

double ProjectedGaussian::radius() const {
    const double mid = 0.5 * (cov2d[0] + cov2d[2]);
    const double half_diff = 0.5 * (cov2d[0] - cov2d[2]);
    const double lambda_max = mid + std::sqrt(half_diff * half_diff + cov2d[1] * cov2d[1]);
    return 3.0 * std::sqrt(std::max(0.0, lambda_max));
}

TileGeometry TileGeometry::for_image(std::uint32_t width, std::uint32_t height) {
    return {width, height, (width + kTileSize - 1) / kTileSize, (height + kTileSize - 1) / kTileSize};
}

std::size_t TileGrid::total_entries() const {
    std::size_t n = 0;
    for (const auto& l : lists) n += l.size();
    return n;
}

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Eigen::Matrix3d covariance_3d(const Eigen::Vector3d& log_scale, const Eigen::Vector4d& quaternion) {
    const double n = quaternion.norm();
    if (n == 0.0) throw Error("covariance_3d: zero quaternion");
    const Eigen::Matrix3d r = quaternion_to_matrix(quaternion / n);
    const Eigen::Matrix3d m = r * log_scale.array().exp().matrix().asDiagonal();
    return m * m.transpose();
}

std::array<double, 3> eval_sh(const std::array<std::array<float, 3>, kShCoefficients>& sh, const Eigen::Vector3d& dir,
                              int degree) {
    if (degree < 0 || degree > 3) throw Error("eval_sh: degree must be in 0..3");
    std::array<double, 3> rgb{};
    const double x = dir[0], y = dir[1], z = dir[2];
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, yz = y * z, xz = x * z;
    for (int ch = 0; ch < 3; ++ch) {
        auto s = [&](int k) { return double(sh[k][ch]); };
        double v = kShC0 * s(0);
        if (degree > 0) {
            v += -kShC1 * y * s(1) + kShC1 * z * s(2) - kShC1 * x * s(3);
            if (degree > 1) {
                v += kShC2[0] * xy * s(4) + kShC2[1] * yz * s(5) + kShC2[2] * (2.0 * zz - xx - yy) * s(6) +
                     kShC2[3] * xz * s(7) + kShC2[4] * (xx - yy) * s(8);
                if (degree > 2) {
                    v += kShC3[0] * y * (3.0 * xx - yy) * s(9) + kShC3[1] * xy * z * s(10) +
                         kShC3[2] * y * (4.0 * zz - xx - yy) * s(11) +
                         kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * s(12) +
                         kShC3[4] * x * (4.0 * zz - xx - yy) * s(13) + kShC3[5] * z * (xx - yy) * s(14) +
                         kShC3[6] * x * (xx - 3.0 * yy) * s(15);
                }
            }
        }
        rgb[ch] = std::max(0.0, v + 0.5);
    }
    return rgb;
}

ProjectAttempt try_project_gaussian(const Gaussian3D& g, std::uint32_t id, const Camera& cam,
                                    const ProjectionOptions& options) {
    const Eigen::Vector3d p = g.position();
    const Eigen::Vector3d t = cam.rotation * p + cam.translation;
    if (!(t.z() > cam.near)) return {ProjectOutcome::culled, std::nullopt};

    const double inv_z = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z * inv_z,
           0.0, cam.fy * inv_z, -cam.fy * t.y() * inv_z * inv_z;
    const Eigen::Vector3d log_scale(g.log_scale[0], g.log_scale[1], g.log_scale[2]);
    const Eigen::Vector4d q(g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]);
    const Eigen::Matrix3d sigma = covariance_3d(log_scale, q);
    const Eigen::Matrix<double, 2, 3> jw = jac * cam.rotation;
    Eigen::Matrix2d cov = jw * sigma * jw.transpose();
    cov(0, 0) += options.blur;
    cov(1, 1) += options.blur;

    const double vxx = cov(0, 0), vxy = 0.5 * (cov(0, 1) + cov(1, 0)), vyy = cov(1, 1);
    const double det = vxx * vyy - vxy * vxy;
    if (!(det > 0.0) || !std::isfinite(det)) return {ProjectOutcome::degenerate, std::nullopt};

    ProjectedGaussian pg;
    pg.id = id;
    pg.mean_x = cam.fx * t.x() * inv_z + cam.cx;
    pg.mean_y = cam.fy * t.y() * inv_z + cam.cy;
    pg.neg_half_a = -0.5 * (vyy / det);
    pg.neg_half_b = -0.5 * (vxx / det);
    pg.c = vxy / det;
    pg.opacity = g.opacity();
    pg.depth = t.z();
    pg.cov2d = {vxx, vxy, vyy};
    const Eigen::Vector3d dir = (p - cam.center()).normalized();
    pg.rgb = eval_sh(g.sh, dir, options.sh_degree);
    return {ProjectOutcome::ok, pg};
}

std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, std::uint32_t id, const Camera& cam,
                                                  const ProjectionOptions& options) {
    return try_project_gaussian(g, id, cam, options).gaussian;
}

std::vector<TileCoord> assign_tiles(const ProjectedGaussian& pg, const TileGeometry& geometry) {
    std::vector<TileCoord> tiles;
    if (geometry.tiles_x == 0 || geometry.tiles_y == 0) return tiles;
    const double r = pg.radius();
    const double lo_x = std::floor((pg.mean_x - r) / kTileSize);
    const double hi_x = std::floor((pg.mean_x + r) / kTileSize);
    const double lo_y = std::floor((pg.mean_y - r) / kTileSize);
    const double hi_y = std::floor((pg.mean_y + r) / kTileSize);
    const double max_x = geometry.tiles_x - 1.0, max_y = geometry.tiles_y - 1.0;
    if (hi_x < 0.0 || hi_y < 0.0 || lo_x > max_x || lo_y > max_y) return tiles;
    const auto x0 = static_cast<std::uint32_t>(std::max(0.0, lo_x));
    const auto x1 = static_cast<std::uint32_t>(std::min(max_x, hi_x));
    const auto y0 = static_cast<std::uint32_t>(std::max(0.0, lo_y));
    const auto y1 = static_cast<std::uint32_t>(std::min(max_y, hi_y));
    tiles.reserve(std::size_t(x1 - x0 + 1) * (y1 - y0 + 1));
    for (std::uint32_t ty = y0; ty <= y1; ++ty)
        for (std::uint32_t tx = x0; tx <= x1; ++tx) tiles.push_back({tx, ty});
    return tiles;
}

ProjectionResult bin_gaussians(std::vector<ProjectedGaussian> gaussians, const TileGeometry& geometry) {
    ProjectionResult result;
    result.grid.geometry = geometry;
    result.grid.lists.resize(geometry.tile_count());
    result.stats.input = gaussians.size();
    for (const auto& pg : gaussians) {
        const auto tiles = assign_tiles(pg, geometry);
        if (tiles.empty()) {
            ++result.stats.offscreen;
            continue;
        }
        const auto index = static_cast<std::uint32_t>(result.gaussians.size());
        for (const auto t : tiles) result.grid.lists[geometry.index(t)].push_back(index);
        result.tiles_touched.push_back(static_cast<std::uint32_t>(tiles.size()));
        result.gaussians.push_back(pg);
    }
    return result;
}

ProjectionResult project_scene(const Scene& scene, const Camera& cam, const ProjectionOptions& options) {
    std::vector<ProjectedGaussian> projected;
    projected.reserve(scene.size());
    std::size_t culled = 0, degenerate = 0;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        auto attempt = try_project_gaussian(scene[i], static_cast<std::uint32_t>(i), cam, options);
        switch (attempt.outcome) {
        case ProjectOutcome::ok: projected.push_back(*attempt.gaussian); break;
        case ProjectOutcome::culled: ++culled; break;
        case ProjectOutcome::degenerate: ++degenerate; break;
        }
    }
    auto result = bin_gaussians(std::move(projected), TileGeometry::for_image(cam.width, cam.height));
    result.stats.input = scene.size();
    result.stats.culled_near = culled;
    result.stats.degenerate = degenerate;
    return result;
}

} // namespace splatsim
