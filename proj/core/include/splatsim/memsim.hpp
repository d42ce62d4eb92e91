#pragma once

#include "splatsim/projection.hpp"
#include "splatsim/schedule.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <unordered_set>
#include <vector>

namespace splatsim {

struct CacheConfig {
    std::uint64_t capacity_bytes = 88 * 1024;
    std::uint32_t ways = 4;
    std::uint32_t line_bytes = 32;  // 9 x FP16 features + 28-bit ID + 4-bit importance, padded
    std::uint32_t id_bits = 28;
    std::uint32_t importance_bits = 4;
    bool decrement_on_hit = true;  // false keeps the stored importance static
    bool unbounded = false;        // infinite capacity: compulsory misses only

    [[nodiscard]] std::uint64_t sets() const;
    void validate() const;
};

struct CacheStats {
    std::uint64_t accesses = 0, hits = 0, misses = 0, evictions = 0;
    std::uint64_t dram_bytes_read = 0;

    [[nodiscard]] double hit_rate() const { return accesses ? double(hits) / double(accesses) : 0.0; }
    CacheStats& operator+=(const CacheStats& o);
    friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

struct AccessOutcome {
    bool hit = false;
    std::optional<std::uint32_t> evicted;
};

// Set-associative GS-feature cache, one Gaussian per line. Victim is the line with
// the lowest importance, ties broken by least-recent use.
class Cache {
public:
    explicit Cache(CacheConfig config);

    AccessOutcome access(std::uint32_t gs_id, std::uint8_t importance);
    [[nodiscard]] const CacheStats& stats() const { return stats_; }
    [[nodiscard]] const CacheConfig& config() const { return config_; }
    [[nodiscard]] bool contains(std::uint32_t gs_id) const;

private:
    struct Line {
        std::uint32_t id = 0;
        std::uint8_t importance = 0;
        std::uint64_t last_use = 0;
        bool valid = false;
    };
    CacheConfig config_;
    std::uint64_t sets_ = 0;
    std::vector<Line> lines_;  // sets x ways
    std::unordered_set<std::uint32_t> resident_;  // unbounded mode
    std::uint64_t clock_ = 0;
    CacheStats stats_;
};

// Per-tile Gaussian ID lists plus the 4-bit importance of every ID.
struct TileWorkload {
    TileGeometry geometry;
    std::vector<std::vector<std::uint32_t>> lists;  // Gaussian IDs, indexed like TileGeometry::index
    std::vector<std::uint8_t> importance;           // indexed by Gaussian ID

    [[nodiscard]] std::size_t total_accesses() const;
    [[nodiscard]] std::size_t distinct_gaussians() const;
};

[[nodiscard]] TileWorkload workload_from_projection(const ProjectionResult& projection);

// Synthetic frame where every Gaussian covers a random rectangle of between
// `min_span` and `max_span` tiles.
struct MultiTileSpec {
    std::uint32_t tiles_x = 32, tiles_y = 32;
    std::uint32_t gaussians = 4000;
    std::uint32_t min_span = 2, max_span = 6;
};
[[nodiscard]] TileWorkload make_multitile_workload(const MultiTileSpec& spec, std::uint64_t seed);

// Replays the tiles in trajectory order, touching every listed Gaussian once per tile.
[[nodiscard]] CacheStats simulate_frame(const TileWorkload& workload, const Trajectory& trajectory,
                                        const CacheConfig& config);
[[nodiscard]] CacheStats simulate_frame(const ProjectionResult& projection, const Trajectory& trajectory,
                                        const CacheConfig& config);

// Every access goes to DRAM.
[[nodiscard]] CacheStats no_cache_stats(const TileWorkload& workload, std::uint32_t line_bytes = 32);

struct DramConfig {
    double bandwidth_gb_per_s = 38.4;
    double clock_ghz = 1.0;
    std::uint64_t burst_latency_cycles = 20;  // fixed cost per miss
    double energy_pj_per_byte = 20.0;         // proxy; only ratios are meaningful

    [[nodiscard]] double bytes_per_cycle() const { return bandwidth_gb_per_s / clock_ghz; }
};

struct DramReport {
    std::uint64_t bytes = 0;
    std::uint64_t transfer_cycles = 0;
    std::uint64_t latency_cycles = 0;
    std::uint64_t total_cycles = 0;
    double energy_pj = 0.0;
};

[[nodiscard]] DramReport dram_traffic_report(const CacheStats& stats, const DramConfig& config = {});
[[nodiscard]] std::uint64_t transfer_cycles(std::uint64_t bytes, double bytes_per_cycle);

[[nodiscard]] nlohmann::json to_json(const CacheStats& stats);
[[nodiscard]] nlohmann::json to_json(const DramReport& report);
void write_csv_header(std::ostream& out);  // scheme,seed,hit_rate,dram_bytes
void write_csv_row(std::ostream& out, Scheme scheme, std::uint64_t seed, const CacheStats& stats);

} // namespace splatsim
