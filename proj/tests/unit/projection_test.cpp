#include "oracles.hpp"
#include "splatsim/error.hpp"
#include "splatsim/projection.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace splatsim;

namespace {

Camera test_camera(std::uint32_t w = 64, std::uint32_t h = 64) {
    return Camera::look_at({0, 0, 5}, {0, 0, 0}, {0, 1, 0}, w, h, 0.8);
}

Gaussian3D random_gaussian(std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    Gaussian3D g;
    for (float& v : g.mean) v = u(rng);
    for (float& v : g.log_scale) v = -2.5f + u(rng);
    for (float& v : g.rotation) v = u(rng);
    g.opacity_logit = 2.0f * u(rng);
    for (auto& row : g.sh)
        for (float& v : row) v = 0.3f * u(rng);
    return g;
}

} // namespace

TEST(Covariance3D, IdentityAndAxisScales) {
    EXPECT_TRUE(covariance_3d({0, 0, 0}, {1, 0, 0, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    const Eigen::Matrix3d s = covariance_3d({std::log(2.0), 0, 0}, {1, 0, 0, 0});
    EXPECT_TRUE(s.isApprox(Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-14));
    EXPECT_THROW((void)covariance_3d({0, 0, 0}, {0, 0, 0, 0}), Error);
}

TEST(Covariance3D, EigenvaluesAreSquaredScales) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const Eigen::Vector3d s(u(rng), u(rng), u(rng));
        const Eigen::Vector4d q(u(rng), u(rng), u(rng), u(rng));
        const Eigen::Matrix3d sigma = covariance_3d(s, q);
        EXPECT_TRUE(sigma.isApprox(sigma.transpose(), 1e-14));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sigma);
        std::vector<double> expect{std::exp(2 * s[0]), std::exp(2 * s[1]), std::exp(2 * s[2])};
        std::sort(expect.begin(), expect.end());
        for (int k = 0; k < 3; ++k) EXPECT_NEAR(es.eigenvalues()[k], expect[k], 1e-9 * std::max(1.0, expect[k]));
    }
}

TEST(ProjectGaussian, IsotropicOnAxis) {
    Gaussian3D g;
    g.log_scale = {-2, -2, -2};
    const Camera cam = test_camera();
    const auto pg = project_gaussian(g, 0, cam);
    ASSERT_TRUE(pg);
    EXPECT_NEAR(pg->mean_x, cam.cx, 1e-12);
    EXPECT_NEAR(pg->mean_y, cam.cy, 1e-12);
    EXPECT_NEAR(pg->cov2d[1], 0.0, 1e-12);
    EXPECT_NEAR(pg->c, 0.0, 1e-12);
    EXPECT_NEAR(pg->a(), pg->b(), 1e-12);
    EXPECT_NEAR(pg->depth, 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(pg->opacity, 0.5);
}

TEST(ProjectGaussian, CulledByNear) {
    Camera cam = test_camera();
    cam.near = 2.0;
    Gaussian3D g;
    g.mean = {0, 0, 4};  // camera depth 1 = near / 2
    const auto attempt = try_project_gaussian(g, 0, cam);
    EXPECT_EQ(attempt.outcome, ProjectOutcome::culled);
    EXPECT_FALSE(attempt.gaussian);
}

TEST(ProjectGaussian, ConicMatchesMatrixInverse) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    const Camera cam = test_camera();
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const auto pg = project_gaussian(random_gaussian(rng), 0, cam);
        if (!pg) continue;
        EXPECT_GT(pg->a(), 0.0);
        EXPECT_GT(pg->b(), 0.0);
        EXPECT_GT(pg->a() * pg->b() - pg->c * pg->c, 0.0);
        Eigen::Matrix2d cov;
        cov << pg->cov2d[0], pg->cov2d[1], pg->cov2d[1], pg->cov2d[2];
        const Eigen::Matrix2d inv = cov.inverse();
        for (int k = 0; k < 10; ++k) {
            const Eigen::Vector2d d(u(rng), u(rng));
            const double expect = -0.5 * d.dot(inv * d);
            EXPECT_NEAR(pg->exponent(d.x(), d.y()), expect, 1e-9 * std::max(1.0, std::abs(expect)));
        }
        ++checked;
    }
    EXPECT_GT(checked, 200);
}

TEST(EvalSh, ConstantAndOffset) {
    std::array<std::array<float, 3>, kShCoefficients> sh{};
    const Eigen::Vector3d dir(0, 0, 1);
    auto rgb = eval_sh(sh, dir, 3);
    for (double v : rgb) EXPECT_DOUBLE_EQ(v, 0.5);
    sh[0] = {0.5f, 0.5f, 0.5f};
    rgb = eval_sh(sh, dir, 0);
    for (double v : rgb) EXPECT_NEAR(v, 0.5 * 0.28209479177 + 0.5, 1e-10);
    EXPECT_THROW((void)eval_sh(sh, dir, 4), Error);
}

TEST(EvalSh, BandOneIsOdd) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 1; k <= 3; ++k) {
        std::array<std::array<float, 3>, kShCoefficients> sh{};
        sh[k] = {0.4f, -0.3f, 0.2f};
        for (int i = 0; i < 50; ++i) {
            const Eigen::Vector3d dir = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
            const auto p = eval_sh(sh, dir, 1), n = eval_sh(sh, -dir, 1);
            // Without clamping the two would be 0.5 + v and 0.5 - v.
            for (int c = 0; c < 3; ++c) {
                if (p[c] > 0.0 && n[c] > 0.0) EXPECT_NEAR(p[c] - 0.5, -(n[c] - 0.5), 1e-12);
            }
        }
    }
}

TEST(AssignTiles, SmallAndCorner) {
    const auto geo = TileGeometry::for_image(64, 64);
    ProjectedGaussian tiny;
    tiny.mean_x = 20;
    tiny.mean_y = 40;
    tiny.cov2d = {0.01, 0.0, 0.01};
    ASSERT_LT(tiny.radius(), 1.0);
    const auto one = assign_tiles(tiny, geo);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], (TileCoord{1, 2}));

    ProjectedGaussian corner;
    corner.mean_x = 32;
    corner.mean_y = 16;
    corner.cov2d = {4.0 / 9.0, 0.0, 4.0 / 9.0};  // r = 3 * sqrt(4/9) = 2
    EXPECT_NEAR(corner.radius(), 2.0, 1e-12);
    EXPECT_EQ(assign_tiles(corner, geo).size(), 4u);
}

TEST(AssignTiles, MatchesBruteForce) {
    std::mt19937_64 rng(4);
    const auto geo = TileGeometry::for_image(100, 70);
    for (int i = 0; i < 2000; ++i) {
        const auto pg = oracle::random_projected(rng, -30.0, 130.0, 0.2, 15.0);
        auto got = assign_tiles(pg, geo);
        auto expect = oracle::tiles_bruteforce(pg, geo);
        std::sort(got.begin(), got.end());
        std::sort(expect.begin(), expect.end());
        EXPECT_EQ(got, expect);
    }
}

TEST(ProjectScene, EmptyScene) {
    const auto r = project_scene(Scene{}, test_camera());
    EXPECT_TRUE(r.gaussians.empty());
    EXPECT_EQ(r.grid.total_entries(), 0u);
    EXPECT_EQ(r.grid.lists.size(), 16u);
}

TEST(ProjectScene, CountsAndOrdering) {
    std::mt19937_64 rng(5);
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 400; ++i) gs.push_back(random_gaussian(rng));
    const Scene scene(gs);
    const auto r = project_scene(scene, test_camera(80, 48));
    std::size_t sum_touched = 0;
    for (auto t : r.tiles_touched) sum_touched += t;
    EXPECT_EQ(r.grid.total_entries(), sum_touched);
    for (std::size_t i = 1; i < r.gaussians.size(); ++i) EXPECT_LT(r.gaussians[i - 1].id, r.gaussians[i].id);
    for (const auto& list : r.grid.lists) EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
    for (std::size_t i = 0; i < r.gaussians.size(); ++i) {
        EXPECT_EQ(r.importance(i), std::min<std::uint32_t>(15, r.tiles_touched[i]));
    }
    EXPECT_EQ(r.stats.input, 400u);
    EXPECT_EQ(r.gaussians.size() + r.stats.culled_near + r.stats.degenerate + r.stats.offscreen, 400u);
}

TEST(ProjectScene, RaisingNearNeverAddsGaussians) {
    std::mt19937_64 rng(6);
    std::vector<Gaussian3D> gs;
    for (int i = 0; i < 300; ++i) {
        auto g = random_gaussian(rng);
        g.mean[2] *= 4.0f;
        gs.push_back(g);
    }
    const Scene scene(gs);
    Camera cam = test_camera();
    std::size_t prev = SIZE_MAX;
    for (double near : {0.01, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0}) {
        cam.near = near;
        const auto n = project_scene(scene, cam).gaussians.size();
        EXPECT_LE(n, prev);
        prev = n;
    }
}
