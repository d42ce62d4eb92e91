#pragma once

#include "splatsim/projection.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace splatsim {

struct HwConfig {
    double clock_ghz = 1.0;
    std::uint32_t pe_rows = 16, pe_cols = 16;
    std::uint32_t muls_per_pe = 6, adds_per_pe = 6;
    double dram_gb_per_s = 38.4;
    std::uint32_t depth_buffer_bytes = 4096;
    std::uint32_t output_buffer_bytes = 4096;
    std::uint32_t gs_feature_bytes = 18;  // 9 x FP16
    std::uint32_t depth_entry_bytes = 4;  // depth + F(d), FP16 each
    std::uint32_t depth_input_bytes = 2;  // one FP16 depth fetched from DRAM
    std::uint32_t pipeline_fill = 4;

    [[nodiscard]] std::uint32_t pes() const { return pe_rows * pe_cols; }
    [[nodiscard]] double bytes_per_cycle() const { return dram_gb_per_s / clock_ghz; }
    [[nodiscard]] std::uint32_t subtile_capacity() const { return depth_buffer_bytes / depth_entry_bytes; }
    [[nodiscard]] double peak_macs_per_cycle() const { return double(pes()) * muls_per_pe; }
    // MACs per F(d) evaluation in sorting mode (the 2l-3n network).
    std::uint32_t sort_macs_per_depth = 6;

    void validate() const;
};

[[nodiscard]] std::uint64_t raster_cycles(std::uint64_t n_gaussians, const HwConfig& hw = {});

struct SortCycles {
    std::uint64_t compute = 0;
    std::uint64_t memory = 0;
    [[nodiscard]] std::uint64_t effective() const { return compute > memory ? compute : memory; }
    [[nodiscard]] bool memory_bound() const { return memory > compute; }
};
[[nodiscard]] SortCycles sort_cycles(std::uint64_t n_depths, const HwConfig& hw = {});

// Per-tile Gaussian ID lists of one frame.
struct FrameWorkload {
    std::vector<std::vector<std::uint32_t>> tiles;

    [[nodiscard]] std::size_t distinct_gaussians() const;
    [[nodiscard]] std::size_t total_entries() const;
};
[[nodiscard]] FrameWorkload frame_workload(const ProjectionResult& projection);
// Random frame for property sweeps: 1..max_tiles tiles, each drawing from a shared ID pool.
[[nodiscard]] FrameWorkload random_frame_workload(std::uint64_t seed, std::uint32_t max_tiles = 32,
                                                  std::uint32_t max_per_tile = 4096);

struct Segment {
    std::string kind;  // "sort", "raster", "overlap"
    std::int64_t tile = -1;
    std::int64_t subtile = -1;
    std::uint64_t cycles = 0;
    std::uint64_t raster_cycles = 0, sort_compute_cycles = 0, depth_fetch_cycles = 0;
    std::uint64_t hidden_cycles = 0;  // work overlapped behind the critical path
};

struct PipelineTrace {
    std::string mode;
    std::vector<Segment> segments;
    std::uint64_t total_cycles = 0;
    std::uint64_t sort_phase_cycles = 0;
    double sort_utilization = 0.0;  // achieved / peak MACs during the sort phase
    std::size_t subtiles = 0;
    std::size_t sorted_depths = 0;  // including replication across subtiles

    [[nodiscard]] std::uint64_t segment_sum() const;
    void write_csv(const std::filesystem::path& path) const;
    [[nodiscard]] nlohmann::json summary() const;  // {mode, cycles, utilization, bound}
};

// Sort phase over all distinct Gaussians, then the tiles back to back.
[[nodiscard]] PipelineTrace simulate_naive_pipeline(const FrameWorkload& frame, const HwConfig& hw = {});

// Subtiles hold up to subtile_capacity() distinct Gaussians and are packed in tile
// order (a subtile may span tile boundaries). The depth fetch and F(d) of subtile
// i + 1 overlap the rasterization of subtile i.
[[nodiscard]] PipelineTrace simulate_interleaved_pipeline(const FrameWorkload& frame, const HwConfig& hw = {});

enum class RooflineMode : std::uint8_t { raster, sort };

struct RooflinePoint {
    double intensity = 0.0;   // MAC / byte
    double attainable = 0.0;  // MAC / cycle
    double peak = 0.0;
    bool memory_bound = false;
};
[[nodiscard]] RooflinePoint roofline_point(RooflineMode mode, const HwConfig& hw = {});

} // namespace splatsim
