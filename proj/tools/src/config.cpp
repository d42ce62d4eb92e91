#include "splatsim/cli/config.hpp"

#include "splatsim/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <set>

namespace splatsim::cli {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object and rejects whatever was not consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "must be an object");
    }

    [[nodiscard]] bool has(const std::string& key) {
        known_.insert(key);
        return j_.contains(key);
    }

    [[nodiscard]] const json& raw(const std::string& key) { return (void)has(key), j_.at(key); }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) fail(key, "must be a number");
        out = v.get<double>();
    }

    template <typename U>
    void unsigned_int(const std::string& key, U& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "must be a non-negative integer");
        const auto value = v.get<std::uint64_t>();
        if (value > std::uint64_t(std::numeric_limits<U>::max())) fail(key, "is out of range");
        out = static_cast<U>(value);
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "must be an integer");
        out = v.get<int>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(key, "must be true or false");
        out = v.get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) fail(key, "must be a string");
        out = v.get<std::string>();
    }

    void path(const std::string& key, std::filesystem::path& out) {
        std::string s;
        if (!has(key)) return;
        string(key, s);
        out = s;
    }

    // Parses a string value with `parse`, prefixing its error with the key path.
    template <typename T>
    void choice(const std::string& key, T& out, const std::function<T(std::string_view)>& parse) {
        std::string s;
        if (!has(key)) return;
        string(key, s);
        try {
            out = parse(s);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

    template <typename T>
    void choice_list(const std::string& key, std::vector<T>& out, const std::function<T(std::string_view)>& parse) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of strings");
        out.clear();
        for (const json& e : v) {
            if (!e.is_string()) fail(key, "must be a non-empty array of strings");
            try {
                out.push_back(parse(e.get<std::string>()));
            } catch (const ConfigError& err) {
                fail(key, err.what());
            }
        }
    }

    [[nodiscard]] std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::string where = key.empty() ? (path_.empty() ? "config" : path_) : child(key);
        throw ConfigError(where + ": " + what);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!known_.count(key)) fail(key, "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

SceneSource parse_source(std::string_view s) {
    if (s == "synthetic") return SceneSource::synthetic;
    if (s == "ply") return SceneSource::ply;
    if (s == "native") return SceneSource::native;
    throw ConfigError("expected synthetic|ply|native");
}

SyntheticPreset parse_preset(std::string_view s) {
    if (s == "random") return SyntheticPreset::random;
    if (s == "single") return SyntheticPreset::single;
    if (s == "layers") return SyntheticPreset::layers;
    throw ConfigError("expected random|single|layers");
}

ColorMode parse_color(std::string_view s) {
    if (s == "random") return ColorMode::random;
    if (s == "per_layer") return ColorMode::per_layer;
    if (s == "gray") return ColorMode::gray;
    throw ConfigError("expected random|per_layer|gray");
}

RenderMode parse_mode(std::string_view s) {
    if (s == "sorted") return RenderMode::sorted;
    if (s == "weighted_fixed") return RenderMode::weighted_fixed;
    if (s == "weighted_learned") return RenderMode::weighted_learned;
    throw ConfigError("expected sorted|weighted_fixed|weighted_learned");
}

AlphaPath parse_alpha_path(std::string_view s) {
    if (s == "axis") return AlphaPath::axis;
    if (s == "naive") return AlphaPath::naive;
    throw ConfigError("expected axis|naive");
}

CacheWorkload parse_cache_workload(std::string_view s) {
    if (s == "multitile") return CacheWorkload::multitile;
    if (s == "scene") return CacheWorkload::scene;
    throw ConfigError("expected multitile|scene");
}

PerfWorkload parse_perf_workload(std::string_view s) {
    if (s == "scene") return PerfWorkload::scene;
    if (s == "random") return PerfWorkload::random;
    throw ConfigError("expected scene|random");
}

PipelineMode parse_pipeline(std::string_view s) {
    if (s == "naive") return PipelineMode::naive;
    if (s == "interleaved") return PipelineMode::interleaved;
    if (s == "both") return PipelineMode::both;
    throw ConfigError("expected naive|interleaved|both");
}

MlpShape parse_shape(std::string_view s) { return MlpShape::parse(s); }
Arith parse_arith_cfg(std::string_view s) { return parse_arith(s); }

void read_synthetic(Section& s, SyntheticSpec& spec) {
    s.choice<SyntheticPreset>("preset", spec.preset, parse_preset);
    s.unsigned_int("count", spec.count);
    s.integer("layers", spec.layers);
    s.number("extent", spec.extent);
    s.number("opacity_min", spec.opacity_min);
    s.number("opacity_max", spec.opacity_max);
    s.number("scale_min", spec.scale_min);
    s.number("scale_max", spec.scale_max);
    s.choice<ColorMode>("color", spec.color, parse_color);
    s.integer("cameras", spec.camera_count);
    s.number("orbit_radius", spec.orbit_radius);
    s.number("orbit_arc_degrees", spec.orbit_arc_degrees);
    s.unsigned_int("width", spec.width);
    s.unsigned_int("height", spec.height);
    s.number("fov_y_degrees", spec.fov_y_degrees);
    if (spec.camera_count < 1) s.fail("cameras", "must be at least 1");
    if (spec.width == 0 || spec.height == 0) s.fail("width", "image size must be positive");
    if (!(spec.scale_min > 0.0 && spec.scale_min <= spec.scale_max)) s.fail("scale_min", "needs 0 < scale_min <= scale_max");
    if (!(spec.fov_y_degrees > 0.0 && spec.fov_y_degrees < 180.0)) s.fail("fov_y_degrees", "must be in (0, 180)");
}

void read_scene(const json& j, SceneConfig& cfg) {
    Section s(j, "scene");
    s.choice<SceneSource>("source", cfg.source, parse_source);
    s.path("path", cfg.path);
    if (s.has("synthetic")) {
        Section syn(s.raw("synthetic"), s.child("synthetic"));
        read_synthetic(syn, cfg.synthetic);
        syn.finish();
    }
    if (cfg.source != SceneSource::synthetic && cfg.path.empty()) s.fail("path", "is required for ply and native scenes");
    s.finish();
}

void read_render(const json& j, RenderConfig& cfg) {
    Section s(j, "render");
    s.choice<RenderMode>("mode", cfg.mode, parse_mode);
    s.number("k", cfg.k);
    s.path("net", cfg.net);
    s.choice<Arith>("arith", cfg.arith, parse_arith_cfg);
    s.choice<AlphaPath>("alpha_path", cfg.alpha_path, parse_alpha_path);
    s.unsigned_int("camera", cfg.camera);
    s.choice<DepthNorm>("depth_norm", cfg.depth_norm, parse_depth_norm);
    s.number("depth_scale", cfg.depth_scale);
    s.number("alpha_cap", cfg.raster.alpha_cap);
    s.number("alpha_skip", cfg.raster.alpha_skip);
    s.number("t_stop", cfg.raster.t_stop);
    if (s.has("background")) {
        const json& bg = s.raw("background");
        if (!bg.is_array() || bg.size() != 3) s.fail("background", "must be an array of 3 numbers");
        for (int c = 0; c < 3; ++c) {
            if (!bg[c].is_number()) s.fail("background", "must be an array of 3 numbers");
            cfg.raster.background[c] = bg[c].get<double>();
        }
    }
    if (cfg.mode == RenderMode::weighted_learned && cfg.net.empty()) s.fail("net", "is required for weighted_learned");
    if (!(cfg.raster.alpha_cap > 0.0 && cfg.raster.alpha_cap <= 1.0)) s.fail("alpha_cap", "must be in (0, 1]");
    if (!(cfg.raster.alpha_skip >= 0.0 && cfg.raster.alpha_skip < 1.0)) s.fail("alpha_skip", "must be in [0, 1)");
    if (!(cfg.raster.t_stop >= 0.0 && cfg.raster.t_stop < 1.0)) s.fail("t_stop", "must be in [0, 1)");
    s.finish();
}

void read_train(const json& j, TrainSection& cfg) {
    Section s(j, "train");
    TrainConfig& t = cfg.train;
    s.unsigned_int("steps", t.steps);
    s.number("mlp_lr", t.mlp_lr);
    s.number("gaussian_lr_factor", t.gaussian_lr_factor);
    s.number("opacity_base_lr", t.opacity_base_lr);
    s.number("color_base_lr", t.color_base_lr);
    s.number("ssim_weight", t.ssim_weight);
    s.choice<DepthNorm>("depth_norm", t.depth_norm, parse_depth_norm);
    s.number("depth_scale", t.depth_scale);
    s.choice<MlpShape>("shape", t.shape, parse_shape);
    s.unsigned_int("eval_every", t.eval_every);
    s.boolean("train_gaussians", t.train_gaussians);
    s.path("init_net", cfg.init_net);
    try {
        t.validate();
    } catch (const ConfigError& e) {
        s.fail("", e.what());
    }
    s.finish();
}

void read_dse(const json& j, DseConfig& cfg) {
    Section s(j, "dse");
    s.choice_list<MlpShape>("variants", cfg.variants, parse_shape);
    s.finish();
}

void read_sched(const json& j, SchedConfig& cfg) {
    Section s(j, "sched");
    s.choice_list<Scheme>("schemes", cfg.schemes, parse_scheme);
    s.unsigned_int("tiles_x", cfg.tiles_x);
    s.unsigned_int("tiles_y", cfg.tiles_y);
    s.unsigned_int("pi_block", cfg.options.pi_block);
    s.boolean("column_major_blocks", cfg.options.column_major_blocks);
    if (cfg.tiles_x == 0 || cfg.tiles_y == 0) s.fail("tiles_x", "grid must be at least 1x1");
    const auto b = cfg.options.pi_block;
    if (b == 0 || (b & (b - 1)) != 0) s.fail("pi_block", "must be a power of two");
    s.finish();
}

void read_cache(const json& j, CacheSection& cfg) {
    Section s(j, "cache");
    s.unsigned_int("capacity_bytes", cfg.cache.capacity_bytes);
    s.unsigned_int("ways", cfg.cache.ways);
    s.unsigned_int("line_bytes", cfg.cache.line_bytes);
    s.boolean("decrement_on_hit", cfg.cache.decrement_on_hit);
    s.boolean("unbounded", cfg.cache.unbounded);
    if (s.has("working_set_fraction")) {
        double f = 0.0;
        s.number("working_set_fraction", f);
        if (!(f > 0.0 && f <= 1.0)) s.fail("working_set_fraction", "must be in (0, 1]");
        cfg.working_set_fraction = f;
    }
    s.choice<CacheWorkload>("workload", cfg.workload, parse_cache_workload);
    if (s.has("multitile")) {
        Section m(s.raw("multitile"), s.child("multitile"));
        m.unsigned_int("tiles_x", cfg.multitile.tiles_x);
        m.unsigned_int("tiles_y", cfg.multitile.tiles_y);
        m.unsigned_int("gaussians", cfg.multitile.gaussians);
        m.unsigned_int("min_span", cfg.multitile.min_span);
        m.unsigned_int("max_span", cfg.multitile.max_span);
        m.finish();
    }
    s.choice_list<Scheme>("schemes", cfg.schemes, parse_scheme);
    s.unsigned_int("seeds", cfg.seeds);
    if (s.has("dram")) {
        Section d(s.raw("dram"), s.child("dram"));
        d.number("bandwidth_gb_per_s", cfg.dram.bandwidth_gb_per_s);
        d.number("clock_ghz", cfg.dram.clock_ghz);
        d.unsigned_int("burst_latency_cycles", cfg.dram.burst_latency_cycles);
        d.number("energy_pj_per_byte", cfg.dram.energy_pj_per_byte);
        if (!(cfg.dram.bandwidth_gb_per_s > 0.0 && cfg.dram.clock_ghz > 0.0))
            d.fail("bandwidth_gb_per_s", "bandwidth and clock must be positive");
        d.finish();
    }
    if (cfg.seeds == 0) s.fail("seeds", "must be positive");
    if (!cfg.working_set_fraction) {
        try {
            cfg.cache.validate();
        } catch (const ConfigError& e) {
            s.fail("", e.what());
        }
    }
    s.finish();
}

void read_perf(const json& j, PerfConfig& cfg) {
    Section s(j, "perf");
    s.choice<PipelineMode>("pipeline", cfg.pipeline, parse_pipeline);
    s.choice<PerfWorkload>("workload", cfg.workload, parse_perf_workload);
    s.unsigned_int("random_seeds", cfg.random_seeds);
    if (s.has("hw")) {
        Section h(s.raw("hw"), s.child("hw"));
        HwConfig& hw = cfg.hw;
        h.number("clock_ghz", hw.clock_ghz);
        h.unsigned_int("pe_rows", hw.pe_rows);
        h.unsigned_int("pe_cols", hw.pe_cols);
        h.unsigned_int("muls_per_pe", hw.muls_per_pe);
        h.unsigned_int("adds_per_pe", hw.adds_per_pe);
        h.number("dram_gb_per_s", hw.dram_gb_per_s);
        h.unsigned_int("depth_buffer_bytes", hw.depth_buffer_bytes);
        h.unsigned_int("output_buffer_bytes", hw.output_buffer_bytes);
        h.unsigned_int("gs_feature_bytes", hw.gs_feature_bytes);
        h.unsigned_int("depth_entry_bytes", hw.depth_entry_bytes);
        h.unsigned_int("depth_input_bytes", hw.depth_input_bytes);
        h.unsigned_int("pipeline_fill", hw.pipeline_fill);
        h.unsigned_int("sort_macs_per_depth", hw.sort_macs_per_depth);
        try {
            hw.validate();
        } catch (const ConfigError& e) {
            h.fail("", e.what());
        }
        h.finish();
    }
    s.finish();
}

} // namespace

std::string_view to_string(RenderMode mode) {
    switch (mode) {
        case RenderMode::sorted: return "sorted";
        case RenderMode::weighted_fixed: return "weighted_fixed";
        case RenderMode::weighted_learned: return "weighted_learned";
    }
    return "?";
}

std::string_view to_string(SceneSource source) {
    switch (source) {
        case SceneSource::synthetic: return "synthetic";
        case SceneSource::ply: return "ply";
        case SceneSource::native: return "native";
    }
    return "?";
}

RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    Section s(j, "");
    s.unsigned_int("seed", cfg.seed);
    s.unsigned_int("threads", cfg.threads);
    s.path("out", cfg.out);
    if (s.has("scene")) read_scene(s.raw("scene"), cfg.scene);
    if (s.has("render")) read_render(s.raw("render"), cfg.render);
    if (s.has("train")) read_train(s.raw("train"), cfg.train);
    if (s.has("dse")) read_dse(s.raw("dse"), cfg.dse);
    if (s.has("sched")) read_sched(s.raw("sched"), cfg.sched);
    if (s.has("cache")) read_cache(s.raw("cache"), cfg.cache);
    if (s.has("perf")) read_perf(s.raw("perf"), cfg.perf);
    s.finish();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

} // namespace splatsim::cli
