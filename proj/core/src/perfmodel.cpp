#include "splatsim/perfmodel.hpp"

#include "splatsim/error.hpp"
#include "splatsim/memsim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

namespace splatsim {

void HwConfig::validate() const {
    if (!(clock_ghz > 0.0) || !(dram_gb_per_s > 0.0)) throw ConfigError("hw: clock and bandwidth must be positive");
    if (pe_rows == 0 || pe_cols == 0 || muls_per_pe == 0 || adds_per_pe == 0) {
        throw ConfigError("hw: PE array dimensions and units must be positive");
    }
    if (depth_entry_bytes == 0 || depth_input_bytes == 0 || gs_feature_bytes == 0 || sort_macs_per_depth == 0) {
        throw ConfigError("hw: byte sizes must be positive");
    }
    if (subtile_capacity() == 0) throw ConfigError("hw: depth buffer holds no entries");
}

std::uint64_t raster_cycles(std::uint64_t n, const HwConfig& hw) { return hw.pipeline_fill + n; }

SortCycles sort_cycles(std::uint64_t n, const HwConfig& hw) {
    SortCycles s;
    s.compute = (n + hw.pes() - 1) / hw.pes();
    s.memory = transfer_cycles(n * hw.depth_input_bytes, hw.bytes_per_cycle());
    return s;
}

std::size_t FrameWorkload::distinct_gaussians() const {
    std::unordered_set<std::uint32_t> ids;
    for (const auto& t : tiles) ids.insert(t.begin(), t.end());
    return ids.size();
}

std::size_t FrameWorkload::total_entries() const {
    std::size_t n = 0;
    for (const auto& t : tiles) n += t.size();
    return n;
}

FrameWorkload frame_workload(const ProjectionResult& projection) {
    FrameWorkload f;
    for (const auto& list : projection.grid.lists) {
        if (list.empty()) continue;
        auto& ids = f.tiles.emplace_back();
        for (std::uint32_t idx : list) ids.push_back(projection.gaussians[idx].id);
    }
    return f;
}

FrameWorkload random_frame_workload(std::uint64_t seed, std::uint32_t max_tiles, std::uint32_t max_per_tile) {
    std::mt19937_64 rng(seed);
    FrameWorkload f;
    const std::uint32_t tiles = std::uniform_int_distribution<std::uint32_t>(1, max_tiles)(rng);
    const std::uint32_t pool = std::uniform_int_distribution<std::uint32_t>(1, max_per_tile * 2)(rng);
    for (std::uint32_t t = 0; t < tiles; ++t) {
        const std::uint32_t n = std::uniform_int_distribution<std::uint32_t>(0, max_per_tile)(rng);
        std::unordered_set<std::uint32_t> chosen;
        std::uniform_int_distribution<std::uint32_t> pick(0, pool - 1);
        while (chosen.size() < std::min(n, pool)) chosen.insert(pick(rng));
        std::vector<std::uint32_t> ids(chosen.begin(), chosen.end());
        std::sort(ids.begin(), ids.end());
        f.tiles.push_back(std::move(ids));
    }
    return f;
}

std::uint64_t PipelineTrace::segment_sum() const {
    std::uint64_t s = 0;
    for (const auto& seg : segments) s += seg.cycles;
    return s;
}

void PipelineTrace::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "mode,kind,tile,subtile,cycles,raster_cycles,sort_compute_cycles,depth_fetch_cycles,hidden_cycles\n";
    for (const auto& s : segments) {
        out << mode << ',' << s.kind << ',' << s.tile << ',' << s.subtile << ',' << s.cycles << ',' << s.raster_cycles
            << ',' << s.sort_compute_cycles << ',' << s.depth_fetch_cycles << ',' << s.hidden_cycles << '\n';
    }
}

nlohmann::json PipelineTrace::summary() const {
    return {{"mode", mode},
            {"cycles", total_cycles},
            {"sort_phase_cycles", sort_phase_cycles},
            {"utilization", sort_utilization},
            {"bound", sort_phase_cycles > 0 && sort_utilization < 1.0 ? "memory" : "compute"},
            {"subtiles", subtiles},
            {"sorted_depths", sorted_depths}};
}

namespace {

double utilization(std::uint64_t depths, std::uint64_t cycles, const HwConfig& hw) {
    if (cycles == 0) return 0.0;
    return double(depths) * hw.sort_macs_per_depth / (double(cycles) * hw.peak_macs_per_cycle());
}

} // namespace

PipelineTrace simulate_naive_pipeline(const FrameWorkload& frame, const HwConfig& hw) {
    hw.validate();
    PipelineTrace trace;
    trace.mode = "naive";
    const std::size_t distinct = frame.distinct_gaussians();
    if (frame.total_entries() == 0) return trace;
    const SortCycles s = sort_cycles(distinct, hw);
    Segment sort{"sort", -1, -1, s.effective(), 0, s.compute, s.memory, 0};
    trace.segments.push_back(sort);
    trace.sort_phase_cycles = s.effective();
    trace.sorted_depths = distinct;
    trace.sort_utilization = utilization(distinct, s.effective(), hw);
    for (std::size_t t = 0; t < frame.tiles.size(); ++t) {
        const std::uint64_t r = raster_cycles(frame.tiles[t].size(), hw);
        trace.segments.push_back({"raster", std::int64_t(t), -1, r, r, 0, 0, 0});
    }
    trace.total_cycles = trace.segment_sum();
    trace.subtiles = 1;
    return trace;
}

PipelineTrace simulate_interleaved_pipeline(const FrameWorkload& frame, const HwConfig& hw) {
    hw.validate();
    PipelineTrace trace;
    trace.mode = "interleaved";
    if (frame.total_entries() == 0) return trace;

    struct Subtile {
        std::unordered_set<std::uint32_t> ids;
        std::uint64_t raster = 0;
        std::int64_t first_tile = -1;
    };
    std::vector<Subtile> subtiles(1);
    const std::size_t capacity = hw.subtile_capacity();
    for (std::size_t t = 0; t < frame.tiles.size(); ++t) {
        if (frame.tiles[t].empty()) continue;
        bool first_piece = true;
        std::uint64_t piece = 0;
        auto close_piece = [&] {
            if (piece == 0) return;
            subtiles.back().raster += piece + (first_piece ? hw.pipeline_fill : 0);
            first_piece = false;
            piece = 0;
        };
        for (std::uint32_t id : frame.tiles[t]) {
            Subtile* cur = &subtiles.back();
            if (!cur->ids.count(id) && cur->ids.size() >= capacity) {
                close_piece();
                subtiles.emplace_back();
                cur = &subtiles.back();
            }
            if (cur->first_tile < 0) cur->first_tile = std::int64_t(t);
            cur->ids.insert(id);
            ++piece;
        }
        close_piece();
    }

    std::vector<SortCycles> sort(subtiles.size());
    std::uint64_t sort_busy = 0;
    for (std::size_t i = 0; i < subtiles.size(); ++i) {
        sort[i] = sort_cycles(subtiles[i].ids.size(), hw);
        trace.sorted_depths += subtiles[i].ids.size();
    }
    // Prologue: the first subtile's depths stream in while the array evaluates F(d).
    trace.segments.push_back({"sort", subtiles[0].first_tile, 0, sort[0].effective(), 0, sort[0].compute,
                              sort[0].memory, 0});
    sort_busy += sort[0].effective();
    for (std::size_t i = 0; i + 1 < subtiles.size(); ++i) {
        const std::uint64_t r = subtiles[i].raster, next = sort[i + 1].effective();
        const std::uint64_t cycles = std::max(r, next);
        trace.segments.push_back({"overlap", subtiles[i].first_tile, std::int64_t(i + 1), cycles, r,
                                  sort[i + 1].compute, sort[i + 1].memory, std::min(r, next)});
    }
    const std::size_t last = subtiles.size() - 1;
    trace.segments.push_back(
        {"raster", subtiles[last].first_tile, std::int64_t(last), subtiles[last].raster, subtiles[last].raster, 0, 0, 0});
    trace.total_cycles = trace.segment_sum();
    trace.sort_phase_cycles = sort_busy;
    trace.sort_utilization = utilization(subtiles[0].ids.size(), sort_busy, hw);
    trace.subtiles = subtiles.size();
    return trace;
}

RooflinePoint roofline_point(RooflineMode mode, const HwConfig& hw) {
    hw.validate();
    RooflinePoint p;
    p.peak = hw.peak_macs_per_cycle();
    if (mode == RooflineMode::raster) {
        // One 9-parameter record feeds every PE of the tile.
        p.intensity = p.peak / double(hw.gs_feature_bytes);
    } else {
        p.intensity = double(hw.sort_macs_per_depth) / double(hw.depth_input_bytes);
    }
    const double roof = p.intensity * hw.bytes_per_cycle();
    p.attainable = std::min(p.peak, roof);
    p.memory_bound = roof < p.peak;
    return p;
}

} // namespace splatsim
