#include "splatsim/memsim.hpp"

#include "splatsim/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace splatsim {

std::uint64_t CacheConfig::sets() const {
    const std::uint64_t per_set = std::uint64_t(ways) * line_bytes;
    return per_set ? capacity_bytes / per_set : 0;
}

void CacheConfig::validate() const {
    if (ways == 0 || line_bytes == 0) throw ConfigError("cache: ways and line_bytes must be positive");
    if (unbounded) return;
    const std::uint64_t per_set = std::uint64_t(ways) * line_bytes;
    if (capacity_bytes < per_set || capacity_bytes % per_set != 0) {
        throw ConfigError("cache: capacity must be a positive multiple of ways * line_bytes");
    }
    if (id_bits == 0 || id_bits > 32 || importance_bits == 0 || importance_bits > 8) {
        throw ConfigError("cache: id_bits must be 1..32 and importance_bits 1..8");
    }
}

CacheStats& CacheStats::operator+=(const CacheStats& o) {
    accesses += o.accesses;
    hits += o.hits;
    misses += o.misses;
    evictions += o.evictions;
    dram_bytes_read += o.dram_bytes_read;
    return *this;
}

Cache::Cache(CacheConfig config) : config_(config) {
    config_.validate();
    if (!config_.unbounded) {
        sets_ = config_.sets();
        lines_.resize(sets_ * config_.ways);
    }
}

bool Cache::contains(std::uint32_t gs_id) const {
    if (config_.unbounded) return resident_.count(gs_id) != 0;
    const std::size_t base = std::size_t(gs_id % sets_) * config_.ways;
    for (std::uint32_t w = 0; w < config_.ways; ++w) {
        if (lines_[base + w].valid && lines_[base + w].id == gs_id) return true;
    }
    return false;
}

AccessOutcome Cache::access(std::uint32_t gs_id, std::uint8_t importance) {
    if (config_.id_bits < 32 && gs_id >> config_.id_bits) throw Error("cache: Gaussian ID exceeds the tag width");
    const std::uint8_t max_importance = std::uint8_t((1u << config_.importance_bits) - 1);
    importance = std::min(importance, max_importance);
    ++clock_;
    ++stats_.accesses;
    AccessOutcome out;

    if (config_.unbounded) {
        out.hit = !resident_.insert(gs_id).second;
    } else {
        const std::size_t base = std::size_t(gs_id % sets_) * config_.ways;
        Line* victim = nullptr;
        for (std::uint32_t w = 0; w < config_.ways; ++w) {
            Line& l = lines_[base + w];
            if (l.valid && l.id == gs_id) {
                out.hit = true;
                l.last_use = clock_;
                if (config_.decrement_on_hit && l.importance > 0) --l.importance;
                break;
            }
            if (victim && !victim->valid) continue;
            if (!l.valid || !victim || l.importance < victim->importance ||
                (l.importance == victim->importance && l.last_use < victim->last_use)) {
                victim = &l;
            }
        }
        if (!out.hit) {
            if (victim->valid) {
                out.evicted = victim->id;
                ++stats_.evictions;
            }
            *victim = Line{gs_id, importance, clock_, true};
        }
    }
    if (out.hit) {
        ++stats_.hits;
    } else {
        ++stats_.misses;
        stats_.dram_bytes_read += config_.line_bytes;
    }
    return out;
}

std::size_t TileWorkload::total_accesses() const {
    std::size_t n = 0;
    for (const auto& l : lists) n += l.size();
    return n;
}

std::size_t TileWorkload::distinct_gaussians() const {
    std::unordered_set<std::uint32_t> ids;
    for (const auto& l : lists) ids.insert(l.begin(), l.end());
    return ids.size();
}

TileWorkload workload_from_projection(const ProjectionResult& projection) {
    TileWorkload w;
    w.geometry = projection.grid.geometry;
    w.lists.resize(projection.grid.lists.size());
    std::uint32_t max_id = 0;
    for (const auto& pg : projection.gaussians) max_id = std::max(max_id, pg.id);
    w.importance.assign(projection.gaussians.empty() ? 0 : std::size_t(max_id) + 1, 0);
    for (std::size_t i = 0; i < projection.gaussians.size(); ++i) {
        w.importance[projection.gaussians[i].id] = projection.importance(i);
    }
    for (std::size_t t = 0; t < projection.grid.lists.size(); ++t) {
        for (std::uint32_t idx : projection.grid.lists[t]) w.lists[t].push_back(projection.gaussians[idx].id);
    }
    return w;
}

TileWorkload make_multitile_workload(const MultiTileSpec& spec, std::uint64_t seed) {
    if (spec.min_span == 0 || spec.min_span > spec.max_span) throw ConfigError("multitile: bad span range");
    if (spec.tiles_x == 0 || spec.tiles_y == 0) throw ConfigError("multitile: empty grid");
    // Candidate rectangle shapes whose area lies in the span range.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    for (std::uint32_t w = 1; w <= std::min(spec.max_span, spec.tiles_x); ++w)
        for (std::uint32_t h = 1; h <= std::min(spec.max_span, spec.tiles_y); ++h)
            if (w * h >= spec.min_span && w * h <= spec.max_span) shapes.emplace_back(w, h);
    if (shapes.empty()) throw ConfigError("multitile: no rectangle fits the span range on this grid");

    TileWorkload wl;
    wl.geometry.tiles_x = spec.tiles_x;
    wl.geometry.tiles_y = spec.tiles_y;
    wl.geometry.width = spec.tiles_x * kTileSize;
    wl.geometry.height = spec.tiles_y * kTileSize;
    wl.lists.resize(wl.geometry.tile_count());
    wl.importance.resize(spec.gaussians);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_shape(0, shapes.size() - 1);
    for (std::uint32_t id = 0; id < spec.gaussians; ++id) {
        const auto [w, h] = shapes[pick_shape(rng)];
        const std::uint32_t x0 = std::uniform_int_distribution<std::uint32_t>(0, spec.tiles_x - w)(rng);
        const std::uint32_t y0 = std::uniform_int_distribution<std::uint32_t>(0, spec.tiles_y - h)(rng);
        for (std::uint32_t y = y0; y < y0 + h; ++y)
            for (std::uint32_t x = x0; x < x0 + w; ++x) wl.lists[wl.geometry.index({x, y})].push_back(id);
        wl.importance[id] = std::uint8_t(std::min<std::uint32_t>(15, w * h));
    }
    return wl;
}

CacheStats simulate_frame(const TileWorkload& workload, const Trajectory& trajectory, const CacheConfig& config) {
    if (trajectory.tiles_x != workload.geometry.tiles_x || trajectory.tiles_y != workload.geometry.tiles_y) {
        throw Error("simulate_frame: trajectory and tile grid sizes differ");
    }
    Cache cache(config);
    for (const TileCoord t : trajectory.order) {
        for (std::uint32_t id : workload.lists[workload.geometry.index(t)]) {
            cache.access(id, id < workload.importance.size() ? workload.importance[id] : 0);
        }
    }
    return cache.stats();
}

CacheStats simulate_frame(const ProjectionResult& projection, const Trajectory& trajectory,
                          const CacheConfig& config) {
    return simulate_frame(workload_from_projection(projection), trajectory, config);
}

CacheStats no_cache_stats(const TileWorkload& workload, std::uint32_t line_bytes) {
    CacheStats s;
    s.accesses = s.misses = workload.total_accesses();
    s.dram_bytes_read = s.misses * line_bytes;
    return s;
}

std::uint64_t transfer_cycles(std::uint64_t bytes, double bytes_per_cycle) {
    if (bytes == 0) return 0;
    // Guard against 384 / 38.4 landing a hair above 10.
    const double exact = double(bytes) / bytes_per_cycle;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) < 1e-9 * std::max(1.0, exact)) return std::uint64_t(rounded);
    return std::uint64_t(std::ceil(exact));
}

DramReport dram_traffic_report(const CacheStats& stats, const DramConfig& config) {
    DramReport r;
    r.bytes = stats.dram_bytes_read;
    r.transfer_cycles = transfer_cycles(r.bytes, config.bytes_per_cycle());
    r.latency_cycles = stats.misses * config.burst_latency_cycles;
    r.total_cycles = r.transfer_cycles + r.latency_cycles;
    r.energy_pj = double(r.bytes) * config.energy_pj_per_byte;
    return r;
}

nlohmann::json to_json(const CacheStats& s) {
    return {{"accesses", s.accesses},   {"hits", s.hits},
            {"misses", s.misses},       {"evictions", s.evictions},
            {"dram_bytes", s.dram_bytes_read}, {"hit_rate", s.hit_rate()}};
}

nlohmann::json to_json(const DramReport& r) {
    return {{"bytes", r.bytes},
            {"transfer_cycles", r.transfer_cycles},
            {"latency_cycles", r.latency_cycles},
            {"total_cycles", r.total_cycles},
            {"energy_pj", r.energy_pj}};
}

void write_csv_header(std::ostream& out) { out << "scheme,seed,hit_rate,dram_bytes\n"; }

void write_csv_row(std::ostream& out, Scheme scheme, std::uint64_t seed, const CacheStats& stats) {
    out << to_string(scheme) << ',' << seed << ',' << stats.hit_rate() << ',' << stats.dram_bytes_read << '\n';
}

} // namespace splatsim
