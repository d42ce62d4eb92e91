#pragma once

#include "splatsim/memsim.hpp"
#include "splatsim/neuralsort.hpp"
#include "splatsim/perfmodel.hpp"
#include "splatsim/raster.hpp"
#include "splatsim/scene.hpp"
#include "splatsim/schedule.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace splatsim::cli {

enum class SceneSource : std::uint8_t { synthetic, ply, native };

struct SceneConfig {
    SceneSource source = SceneSource::synthetic;
    std::filesystem::path path;  // ply / native
    // Synthetic scene parameters; for ply files only the camera fields are used.
    SyntheticSpec synthetic;
};

enum class RenderMode : std::uint8_t { sorted, weighted_fixed, weighted_learned };

struct RenderConfig {
    RenderMode mode = RenderMode::sorted;
    double k = 0.0;                   // weighted_fixed: F(d) = d^-k (k = 0 gives F = 1)
    std::filesystem::path net;        // weighted_learned
    Arith arith = Arith::exact;
    AlphaPath alpha_path = AlphaPath::axis;
    std::size_t camera = 0;
    DepthNorm depth_norm = DepthNorm::frame_max;
    double depth_scale = 1.0;
    RasterParams raster;
};

struct TrainSection {
    TrainConfig train;
    std::filesystem::path init_net;  // optional starting point instead of a fresh init
};

struct DseConfig {
    std::vector<MlpShape> variants = default_dse_variants();
};

struct SchedConfig {
    std::vector<Scheme> schemes{Scheme::pi};
    std::uint32_t tiles_x = 16, tiles_y = 16;
    TrajectoryOptions options;
};

enum class CacheWorkload : std::uint8_t { multitile, scene };

struct CacheSection {
    CacheConfig cache;
    std::optional<double> working_set_fraction;  // sizes the cache per workload when set
    CacheWorkload workload = CacheWorkload::multitile;
    MultiTileSpec multitile;
    std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
    std::uint32_t seeds = 20;
    DramConfig dram;
};

enum class PerfWorkload : std::uint8_t { scene, random };
enum class PipelineMode : std::uint8_t { naive, interleaved, both };

struct PerfConfig {
    PipelineMode pipeline = PipelineMode::both;
    PerfWorkload workload = PerfWorkload::scene;
    std::uint32_t random_seeds = 1000;
    HwConfig hw;
};

struct RunConfig {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::filesystem::path out = "out";
    SceneConfig scene;
    RenderConfig render;
    TrainSection train;
    DseConfig dse;
    SchedConfig sched;
    CacheSection cache;
    PerfConfig perf;
};

// Strict parse: unknown keys, wrong types and out-of-range values are ConfigErrors
// naming the offending path (e.g. "render.mode").
[[nodiscard]] RunConfig parse_run_config(const nlohmann::json& j);
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

[[nodiscard]] std::string_view to_string(RenderMode mode);
[[nodiscard]] std::string_view to_string(SceneSource source);

} // namespace splatsim::cli
