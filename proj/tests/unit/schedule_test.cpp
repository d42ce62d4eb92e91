#include "splatsim/error.hpp"
#include "splatsim/schedule.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace splatsim;

namespace {

int manhattan(TileCoord a, TileCoord b) {
    return std::abs(int(a.tx) - int(b.tx)) + std::abs(int(a.ty) - int(b.ty));
}

constexpr HilbertOrientation kOrientations[] = {HilbertOrientation::x_first, HilbertOrientation::y_first,
                                                HilbertOrientation::x_first_mirrored,
                                                HilbertOrientation::y_first_mirrored};

} // namespace

TEST(Morton, Examples) {
    EXPECT_EQ(morton_encode(0, 0), 0u);
    EXPECT_EQ(morton_encode(1, 0), 1u);
    EXPECT_EQ(morton_encode(0, 1), 2u);
    EXPECT_EQ(morton_encode(2, 3), 14u);
    EXPECT_EQ(morton_decode(14), (std::pair<std::uint32_t, std::uint32_t>{2, 3}));
}

TEST(Morton, RoundTrip) {
    for (std::uint32_t y = 0; y < 256; ++y)
        for (std::uint32_t x = 0; x < 256; ++x) EXPECT_EQ(morton_decode(morton_encode(x, y)), std::pair(x, y));
    EXPECT_EQ(morton_decode(morton_encode(65535, 40000)), std::pair(65535u, 40000u));
}

TEST(Hilbert, StepsAreUnitAndEndpointsMatchNames) {
    for (std::uint32_t n : {2u, 4u, 8u, 16u}) {
        for (auto o : kOrientations) {
            std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
            std::pair<std::uint32_t, std::uint32_t> prev{};
            for (std::uint64_t d = 0; d < std::uint64_t(n) * n; ++d) {
                const auto p = hilbert_index_to_xy(n, d, o);
                ASSERT_LT(p.first, n);
                ASSERT_LT(p.second, n);
                seen.insert(p);
                if (d > 0) {
                    EXPECT_EQ(manhattan({p.first, p.second}, {prev.first, prev.second}), 1);
                }
                prev = p;
                EXPECT_EQ(hilbert_xy_to_index(n, p.first, p.second, o), d);
            }
            EXPECT_EQ(seen.size(), std::size_t(n) * n);
        }
        const auto last = std::uint64_t(n) * n - 1;
        // The exit corner is fixed per orientation; the first step alternates with log2(n).
        const bool odd_order = std::countr_zero(n) % 2 == 1;
        EXPECT_EQ(hilbert_index_to_xy(n, 1, HilbertOrientation::x_first), odd_order ? std::pair(1u, 0u) : std::pair(0u, 1u));
        EXPECT_EQ(hilbert_index_to_xy(n, last, HilbertOrientation::x_first), std::pair(0u, n - 1));
        EXPECT_EQ(hilbert_index_to_xy(n, 1, HilbertOrientation::y_first), odd_order ? std::pair(0u, 1u) : std::pair(1u, 0u));
        EXPECT_EQ(hilbert_index_to_xy(n, last, HilbertOrientation::y_first), std::pair(n - 1, 0u));
        EXPECT_EQ(hilbert_index_to_xy(n, 0, HilbertOrientation::y_first_mirrored), std::pair(n - 1, 0u));
        EXPECT_EQ(hilbert_index_to_xy(n, last, HilbertOrientation::y_first_mirrored), std::pair(0u, 0u));
    }
}

TEST(Hilbert, Errors) {
    EXPECT_THROW((void)hilbert_index_to_xy(6, 0), Error);
    EXPECT_THROW((void)hilbert_index_to_xy(0, 0), Error);
    EXPECT_THROW((void)hilbert_index_to_xy(4, 16), Error);
    EXPECT_THROW((void)hilbert_xy_to_index(4, 4, 0), Error);
    EXPECT_THROW((void)hilbert_xy_to_index(12, 0, 0), Error);
}

TEST(Trajectory, SmallExamples) {
    const auto r = make_trajectory(Scheme::raster, 2, 2);
    EXPECT_EQ(r.order, (std::vector<TileCoord>{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
    const auto s = make_trajectory(Scheme::s, 3, 2);
    EXPECT_EQ(s.order, (std::vector<TileCoord>{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}}));
    const auto z = make_trajectory(Scheme::z, 2, 2);
    EXPECT_EQ(z.order, (std::vector<TileCoord>{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
    EXPECT_EQ(make_trajectory(Scheme::pi, 1, 1).order, (std::vector<TileCoord>{{0, 0}}));
    EXPECT_THROW((void)make_trajectory(Scheme::s, 0, 4), Error);
    EXPECT_EQ(parse_scheme("pi"), Scheme::pi);
    EXPECT_EQ(to_string(Scheme::z), "z");
    EXPECT_THROW((void)parse_scheme("hilbert"), ConfigError);
}

TEST(Trajectory, EverySchemeIsABijection) {
    for (std::uint32_t h = 1; h <= 64; h += (h < 20 ? 1 : 7))
        for (std::uint32_t w = 1; w <= 64; w += (w < 20 ? 1 : 5))
            for (Scheme s : kAllSchemes) {
                const auto t = make_trajectory(s, w, h);
                EXPECT_TRUE(t.is_permutation()) << to_string(s) << ' ' << w << 'x' << h;
                TrajectoryOptions cm;
                cm.column_major_blocks = true;
                if (s == Scheme::pi) EXPECT_TRUE(make_trajectory(s, w, h, cm).is_permutation());
            }
}

TEST(Trajectory, SIsContinuous) {
    const auto t = make_trajectory(Scheme::s, 13, 9);
    for (std::size_t i = 1; i < t.order.size(); ++i) EXPECT_EQ(manhattan(t.order[i], t.order[i - 1]), 1);
}

TEST(Trajectory, PiBlocksAreContinuousWithinBlockRows) {
    const auto t = make_trajectory(Scheme::pi, 32, 16);
    ASSERT_TRUE(t.is_permutation());
    // Two rows of four 8x8 blocks; the only jump is between the block rows.
    int jumps = 0;
    for (std::size_t i = 1; i < t.order.size(); ++i) {
        if (manhattan(t.order[i], t.order[i - 1]) != 1) {
            ++jumps;
            EXPECT_EQ(i, 256u);
        }
    }
    EXPECT_EQ(jumps, 1);
    // The first block covers exactly [0,8)^2.
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_LT(t.order[i].tx, 8u);
        EXPECT_LT(t.order[i].ty, 8u);
    }
}

TEST(Trajectory, PiHasShorterStepsThanZ) {
    const auto pi = make_trajectory(Scheme::pi, 16, 16);
    const auto z = make_trajectory(Scheme::z, 16, 16);
    EXPECT_LT(pi.mean_step_length(), z.mean_step_length());
    EXPECT_DOUBLE_EQ(make_trajectory(Scheme::s, 16, 16).mean_step_length(), 1.0);
}

TEST(Trajectory, WritesCsv) {
    const auto path = std::filesystem::temp_directory_path() / "splatsim_traj_test.csv";
    make_trajectory(Scheme::s, 2, 2).write_csv(path);
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(all, "step,tx,ty\n0,0,0\n1,1,0\n2,1,1\n3,0,1\n");
    std::filesystem::remove(path);
}
