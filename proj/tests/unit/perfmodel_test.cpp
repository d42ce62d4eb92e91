#include "splatsim/error.hpp"
#include "splatsim/memsim.hpp"
#include "splatsim/perfmodel.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>

using namespace splatsim;

namespace {

FrameWorkload single_tile(std::uint32_t n, std::uint32_t first_id = 0) {
    FrameWorkload f;
    f.tiles.emplace_back(n);
    std::iota(f.tiles[0].begin(), f.tiles[0].end(), first_id);
    return f;
}

} // namespace

TEST(Cycles, RasterAndSort) {
    EXPECT_EQ(raster_cycles(0), 4u);
    EXPECT_EQ(raster_cycles(100), 104u);
    auto s = sort_cycles(256);
    EXPECT_EQ(s.compute, 1u);
    EXPECT_EQ(s.memory, 14u);
    EXPECT_TRUE(s.memory_bound());
    s = sort_cycles(512);
    EXPECT_EQ(s.compute, 2u);
    EXPECT_EQ(s.memory, 27u);
    EXPECT_EQ(s.effective(), 27u);
    EXPECT_EQ(sort_cycles(0).effective(), 0u);
}

TEST(Naive, SingleTile512) {
    const auto t = simulate_naive_pipeline(single_tile(512));
    EXPECT_EQ(t.sort_phase_cycles, 27u);
    EXPECT_EQ(t.total_cycles, 27u + 516u);
    EXPECT_DOUBLE_EQ(t.sort_utilization, 2.0 / 27.0);
    EXPECT_EQ(t.segment_sum(), t.total_cycles);
    EXPECT_EQ(t.summary()["bound"], "memory");
}

TEST(Naive, SortUtilizationIsBoundedByTheMemoryRoof) {
    // Memory-bound ceiling: 3 MAC/B x 38.4 B/cycle over a 1536 MAC/cycle peak.
    const double roof = 3.0 * 38.4 / 1536.0;
    for (std::uint32_t n : {256u, 512u, 1000u, 4096u, 20000u}) {
        const auto t = simulate_naive_pipeline(single_tile(n));
        EXPECT_LE(t.sort_utilization, roof) << n;
        EXPECT_GT(t.sort_utilization, 0.9 * roof) << n;
    }
}

TEST(Naive, SortsDistinctGaussiansOnce) {
    FrameWorkload f;
    f.tiles = {{0, 1, 2}, {1, 2, 3}, {3}};
    const auto t = simulate_naive_pipeline(f);
    EXPECT_EQ(t.sorted_depths, 4u);
    EXPECT_EQ(t.total_cycles, sort_cycles(4).effective() + 7 + 7 + 5);
    EXPECT_EQ(simulate_naive_pipeline(FrameWorkload{}).total_cycles, 0u);
}

TEST(Interleaved, OneSubtileEqualsNaive) {
    for (std::uint32_t n : {1u, 17u, 512u, 1024u}) {
        const auto f = single_tile(n);
        const auto a = simulate_interleaved_pipeline(f);
        EXPECT_EQ(a.subtiles, 1u);
        EXPECT_EQ(a.total_cycles, simulate_naive_pipeline(f).total_cycles) << n;
    }
}

TEST(Interleaved, LargeTileIsFaster) {
    const auto f = single_tile(2048);
    const auto a = simulate_interleaved_pipeline(f);
    const auto n = simulate_naive_pipeline(f);
    EXPECT_EQ(a.subtiles, 2u);
    // 54 (first 1024 depths) + max(1028, 54) + 1024
    EXPECT_EQ(a.total_cycles, 54u + 1028u + 1024u);
    EXPECT_EQ(n.total_cycles, 107u + 2052u);
    EXPECT_LT(a.total_cycles, n.total_cycles);
    EXPECT_EQ(a.segment_sum(), a.total_cycles);
    EXPECT_EQ(a.segments.size(), 3u);
    EXPECT_EQ(a.segments[1].kind, "overlap");
    EXPECT_EQ(a.segments[1].hidden_cycles, 54u);
}

TEST(Interleaved, SubtilesPackAcrossTilesWithoutDuplicates) {
    FrameWorkload f;
    f.tiles = {std::vector<std::uint32_t>(600), std::vector<std::uint32_t>(600)};
    std::iota(f.tiles[0].begin(), f.tiles[0].end(), 0u);
    std::iota(f.tiles[1].begin(), f.tiles[1].end(), 300u);  // 300 shared IDs
    const auto t = simulate_interleaved_pipeline(f);
    // 900 distinct IDs fit one depth buffer (1024 entries).
    EXPECT_EQ(t.subtiles, 1u);
    EXPECT_EQ(t.sorted_depths, 900u);
    EXPECT_EQ(t.total_cycles, simulate_naive_pipeline(f).total_cycles);
}

TEST(Interleaved, NeverSlowerOnRandomWorkloads) {
    int strict = 0, equal = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto f = random_frame_workload(seed, 16, 2048);
        const auto a = simulate_interleaved_pipeline(f);
        const auto n = simulate_naive_pipeline(f);
        ASSERT_LE(a.total_cycles, n.total_cycles) << "seed " << seed;
        EXPECT_EQ(a.segment_sum(), a.total_cycles);
        (a.total_cycles < n.total_cycles ? strict : equal)++;
    }
    EXPECT_GT(strict, 200);
}

TEST(Roofline, RasterIsComputeBoundSortIsMemoryBound) {
    const auto r = roofline_point(RooflineMode::raster);
    const auto s = roofline_point(RooflineMode::sort);
    EXPECT_DOUBLE_EQ(r.peak, 1536.0);
    EXPECT_DOUBLE_EQ(r.intensity, 1536.0 / 18.0);
    EXPECT_DOUBLE_EQ(s.intensity, 3.0);
    EXPECT_FALSE(r.memory_bound);
    EXPECT_TRUE(s.memory_bound);
    EXPECT_DOUBLE_EQ(r.attainable, 1536.0);
    EXPECT_NEAR(s.attainable, 115.2, 1e-9);
    EXPECT_NEAR(r.intensity / s.intensity, 28.444, 1e-3);
}

TEST(HwConfig, Validation) {
    HwConfig hw;
    EXPECT_NO_THROW(hw.validate());
    EXPECT_EQ(hw.subtile_capacity(), 1024u);
    hw.dram_gb_per_s = 0.0;
    EXPECT_THROW(hw.validate(), ConfigError);
    hw = {};
    hw.depth_buffer_bytes = 2;
    EXPECT_THROW(hw.validate(), ConfigError);
}

TEST(Trace, WritesCsv) {
    const auto path = std::filesystem::temp_directory_path() / "splatsim_trace_test.csv";
    simulate_interleaved_pipeline(single_tile(2048)).write_csv(path);
    std::ifstream in(path);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("mode,kind,tile", 0), 0u);
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
    std::filesystem::remove(path);
}
