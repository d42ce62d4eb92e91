#include "splatsim/cli/commands.hpp"

#include "splatsim/error.hpp"
#include "splatsim/image.hpp"
#include "splatsim/metrics.hpp"
#include "splatsim/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>

namespace splatsim::cli {

namespace {

using nlohmann::json;

std::filesystem::path prepare_out(const RunConfig& config) {
    std::filesystem::create_directories(config.out);
    return config.out;
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// JSON has no infinity; identical images report PSNR as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const OpTally& t) {
    return {{"mul", t.mul}, {"add", t.add}, {"exp", t.exp}, {"div", t.div}, {"cmp", t.cmp}, {"mac", t.mac()}};
}

json stats_json(const FrameStats& s) {
    const auto& counts = s.tile_gaussian_counts;
    const std::uint32_t max_count = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    return {{"ops",
             {{"alpha", to_json(s.ops.alpha)},
              {"axis_lines", to_json(s.ops.axis_lines)},
              {"blending", to_json(s.ops.blending)},
              {"total", to_json(s.ops.total())}}},
            {"alpha_path", s.alpha_path == AlphaPath::axis ? "axis" : "naive"},
            {"alpha_mac_reduction_percent", 100.0 * s.alpha_mac_reduction()},
            {"gaussian_tile_pairs", s.gaussian_tile_pairs},
            {"gaussian_tile_evaluations", s.gaussian_tile_evaluations},
            {"blended_contributions", s.blended_contributions},
            {"zero_denominator_pixels", s.zero_denominator_pixels},
            {"projection",
             {{"input", s.projection.input},
              {"culled_near", s.projection.culled_near},
              {"degenerate", s.projection.degenerate},
              {"offscreen", s.projection.offscreen}}},
            {"max_gaussians_per_tile", max_count},
            {"tile_gaussian_counts", counts}};
}

struct LoadedNet {
    DecayMlp mlp;
    std::optional<DepthNorm> norm;
};

LoadedNet load_net(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read decay net " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    LoadedNet net{mlp_from_json(j), std::nullopt};
    if (j.contains("depth_norm")) net.norm = parse_depth_norm(j["depth_norm"].get<std::string>());
    return net;
}

json net_json(const DecayMlp& mlp, DepthNorm norm) {
    if (mlp.shape() == MlpShape{}) return to_json(DecayNet::from_mlp(mlp, norm));
    return to_json(mlp, norm);
}

const Camera& pick_camera(const LoadedScene& s, std::size_t index) {
    if (index >= s.cameras.size()) {
        throw ConfigError("render.camera " + std::to_string(index) + " out of range (scene has " +
                          std::to_string(s.cameras.size()) + " cameras)");
    }
    return s.cameras[index];
}

TrainConfig train_config(const RunConfig& config) {
    TrainConfig t = config.train.train;
    t.seed = config.seed;
    t.alpha_cap = config.render.raster.alpha_cap;
    t.alpha_skip = config.render.raster.alpha_skip;
    return t;
}

std::uint64_t sized_capacity(const CacheConfig& c, std::size_t distinct, double fraction) {
    const std::uint64_t per_set = std::uint64_t(c.ways) * c.line_bytes;
    const auto target = static_cast<std::uint64_t>(double(distinct) * c.line_bytes * fraction);
    return std::max<std::uint64_t>(per_set, target / per_set * per_set);
}

bool conserved(const CacheStats& s, std::uint32_t line_bytes) {
    return s.hits + s.misses == s.accesses && s.dram_bytes_read == s.misses * line_bytes;
}

} // namespace

LoadedScene load_scene(const SceneConfig& config, std::uint64_t seed) {
    LoadedScene out;
    switch (config.source) {
        case SceneSource::synthetic: {
            auto s = make_synthetic_scene(config.synthetic, seed);
            out.scene = std::move(s.scene);
            out.cameras = std::move(s.cameras);
            break;
        }
        case SceneSource::ply:
            out.scene = load_gs_ply(config.path);
            out.cameras = orbit_cameras(config.synthetic);
            break;
        case SceneSource::native: {
            auto b = load_native(config.path);
            out.scene = std::move(b.scene);
            out.cameras = b.cameras.empty() ? orbit_cameras(config.synthetic) : std::move(b.cameras);
            break;
        }
    }
    for (const Camera& c : out.cameras) c.validate(1e-5);
    return out;
}

int cmd_render(const RunConfig& config, std::ostream& log) {
    const LoadedScene s = load_scene(config.scene, config.seed);
    const Camera& cam = pick_camera(s, config.render.camera);
    const ProjectionResult proj = project_scene(s.scene, cam);

    RenderOptions options;
    options.arith = config.render.arith;
    options.alpha_path = config.render.alpha_path;
    options.raster = config.render.raster;
    options.threads = config.threads;
    std::vector<double> decay;
    json mode{{"mode", to_string(config.render.mode)}};
    switch (config.render.mode) {
        case RenderMode::sorted: break;
        case RenderMode::weighted_fixed:
            options.mode = BlendMode::weighted;
            decay = fixed_power_decay(proj, config.render.k);
            mode["k"] = config.render.k;
            break;
        case RenderMode::weighted_learned: {
            options.mode = BlendMode::weighted;
            const LoadedNet net = load_net(config.render.net);
            const DepthNorm norm = net.norm.value_or(config.render.depth_norm);
            decay = compute_decay(proj, net.mlp, norm, config.render.arith, config.render.depth_scale);
            mode["net"] = config.render.net.string();
            mode["shape"] = net.mlp.shape().name();
            mode["depth_norm"] = to_string(norm);
            break;
        }
    }
    const RenderResult r = render_frame(proj, options, decay);

    const auto dir = prepare_out(config);
    write_ppm(r.image, dir / "render.ppm");
    write_raw(r.image, dir / "render.raw");
    json stats = stats_json(r.stats);
    stats["render"] = mode;
    stats["arith"] = to_string(config.render.arith);
    stats["camera"] = config.render.camera;
    stats["width"] = r.image.width;
    stats["height"] = r.image.height;
    write_json(stats, dir / "render_stats.json");

    log << "rendered " << r.image.width << 'x' << r.image.height << " (" << to_string(config.render.mode) << ", "
        << to_string(config.render.arith) << "), " << proj.gaussians.size() << " Gaussians on screen, "
        << r.stats.gaussian_tile_pairs << " tile pairs\n"
        << "alpha-phase MAC reduction " << std::fixed << std::setprecision(1)
        << 100.0 * r.stats.alpha_mac_reduction() << "%\n"
        << "wrote " << (dir / "render.ppm").string() << '\n';
    return kExitOk;
}

namespace {

struct TrainSetup {
    LoadedScene scene;
    TrainConfig train;
    std::optional<TrainProblem> problem;
};

TrainSetup make_train_setup(const RunConfig& config, std::ostream& log) {
    TrainSetup setup{load_scene(config.scene, config.seed), train_config(config), std::nullopt};
    auto gt = render_ground_truth(setup.scene.scene, setup.scene.cameras, config.threads);
    log << "ground truth: " << gt.size() << " sorted views of " << setup.scene.scene.size() << " Gaussians\n";
    setup.problem.emplace(setup.scene.scene, setup.scene.cameras, std::move(gt), setup.train);
    return setup;
}

} // namespace

int cmd_train(const RunConfig& config, std::ostream& log) {
    TrainSetup setup = make_train_setup(config, log);
    DecayMlp initial = init_mlp(setup.train.shape, config.seed);
    if (!config.train.init_net.empty()) {
        initial = load_net(config.train.init_net).mlp;
        if (!(initial.shape() == setup.train.shape)) {
            throw ConfigError("train.init_net has shape " + initial.shape().name() + " but train.shape is " +
                              setup.train.shape.name());
        }
    }
    const TrainResult r = train(*setup.problem, initial, setup.train);

    const auto dir = prepare_out(config);
    write_json(net_json(r.mlp, setup.train.depth_norm), dir / "net.json");
    r.report.write_csv(dir / "train_report.csv");
    save_native(r.scene, setup.scene.cameras, dir / "trained_scene.splat");
    const json summary{{"steps_run", r.report.steps_run},
                       {"diverged", r.report.diverged},
                       {"shape", r.mlp.shape().name()},
                       {"initial_psnr", finite_or_null(r.report.initial_psnr)},
                       {"final_psnr", finite_or_null(r.report.final_psnr)},
                       {"psnr_gain_db", finite_or_null(r.report.final_psnr - r.report.initial_psnr)},
                       {"initial_ssim", r.report.initial_ssim},
                       {"final_ssim", r.report.final_ssim},
                       {"gaussians_before", r.report.gaussians_before},
                       {"gaussians_after", r.report.gaussians_after},
                       {"monotone_fraction", r.report.monotone_fraction}};
    write_json(summary, dir / "train_summary.json");

    log << std::fixed << std::setprecision(3) << "steps " << r.report.steps_run << ": PSNR "
        << r.report.initial_psnr << " -> " << r.report.final_psnr << " dB, SSIM " << r.report.initial_ssim
        << " -> " << r.report.final_ssim << "\n"
        << "Gaussians " << r.report.gaussians_before << " -> " << r.report.gaussians_after << '\n';
    if (r.report.diverged) {
        log << "training diverged (non-finite loss); partial report written\n";
        return kExitDiverged;
    }
    return kExitOk;
}

int cmd_dse(const RunConfig& config, std::ostream& log) {
    TrainSetup setup = make_train_setup(config, log);
    const auto rows = dse_grid(*setup.problem, config.dse.variants, setup.train);
    const auto dir = prepare_out(config);
    std::ofstream out(dir / "dse.csv");
    if (!out) throw Error("cannot write " + (dir / "dse.csv").string());
    out << "variant,macs,params,psnr_before,psnr_after,ssim_after,diverged\n" << std::setprecision(8);
    log << std::left << std::setw(20) << "variant" << std::setw(6) << "MACs" << std::setw(12) << "PSNR before"
        << std::setw(12) << "PSNR after" << "SSIM after\n";
    bool diverged = false;
    for (const DseRow& r : rows) {
        out << r.shape.name() << ',' << r.macs << ',' << r.params << ',' << r.psnr_before << ',' << r.psnr_after
            << ',' << r.ssim_after << ',' << (r.diverged ? 1 : 0) << '\n';
        log << std::left << std::setw(20) << r.shape.name() << std::setw(6) << r.macs << std::fixed
            << std::setprecision(3) << std::setw(12) << r.psnr_before << std::setw(12) << r.psnr_after
            << r.ssim_after << (r.diverged ? "  (diverged)" : "") << '\n';
        diverged = diverged || r.diverged;
    }
    return diverged ? kExitDiverged : kExitOk;
}

int cmd_sched(const RunConfig& config, std::ostream& log) {
    const auto dir = prepare_out(config);
    bool ok = true;
    for (Scheme scheme : config.sched.schemes) {
        const Trajectory t = make_trajectory(scheme, config.sched.tiles_x, config.sched.tiles_y, config.sched.options);
        const auto path = dir / ("trajectory_" + std::string(to_string(scheme)) + ".csv");
        t.write_csv(path);
        const bool perm = t.is_permutation();
        ok = ok && perm;
        log << to_string(scheme) << ' ' << t.tiles_x << 'x' << t.tiles_y << ": " << t.order.size() << " rows, "
            << (perm ? "permutation verified" : "NOT a permutation") << ", mean step " << std::fixed
            << std::setprecision(4) << t.mean_step_length() << " -> " << path.string() << '\n';
    }
    return ok ? kExitOk : kExitValidation;
}

int cmd_cache(const RunConfig& config, std::ostream& log) {
    const CacheSection& cs = config.cache;
    struct Run {
        std::uint64_t seed;
        TileWorkload workload;
    };
    std::vector<Run> runs;
    if (cs.workload == CacheWorkload::multitile) {
        for (std::uint32_t i = 0; i < cs.seeds; ++i) {
            runs.push_back({config.seed + i, make_multitile_workload(cs.multitile, config.seed + i)});
        }
    } else {
        // One run per camera; the "seed" column holds the camera index.
        const LoadedScene s = load_scene(config.scene, config.seed);
        for (std::size_t c = 0; c < s.cameras.size(); ++c) {
            runs.push_back({c, workload_from_projection(project_scene(s.scene, s.cameras[c]))});
        }
    }

    const auto dir = prepare_out(config);
    std::ofstream csv(dir / "cache.csv");
    if (!csv) throw Error("cannot write " + (dir / "cache.csv").string());
    write_csv_header(csv);

    std::map<Scheme, double> hit_sum, bytes_sum, energy_sum;
    double no_cache_energy = 0.0;
    bool ok = true;
    for (const Run& run : runs) {
        CacheConfig cc = cs.cache;
        if (cs.working_set_fraction) cc.capacity_bytes = sized_capacity(cc, run.workload.distinct_gaussians(), *cs.working_set_fraction);
        no_cache_energy += dram_traffic_report(no_cache_stats(run.workload, cc.line_bytes), cs.dram).energy_pj;
        for (Scheme scheme : cs.schemes) {
            const Trajectory t = make_trajectory(scheme, run.workload.geometry.tiles_x, run.workload.geometry.tiles_y);
            const CacheStats st = simulate_frame(run.workload, t, cc);
            ok = ok && conserved(st, cc.line_bytes) && st.accesses == run.workload.total_accesses();
            write_csv_row(csv, scheme, run.seed, st);
            hit_sum[scheme] += st.hit_rate();
            bytes_sum[scheme] += double(st.dram_bytes_read);
            energy_sum[scheme] += dram_traffic_report(st, cs.dram).energy_pj;
        }
    }

    const double n = double(runs.size());
    json summary{{"runs", runs.size()}, {"workload", cs.workload == CacheWorkload::multitile ? "multitile" : "scene"},
                 {"conservation_ok", ok}};
    json schemes = json::object();
    log << "scheme   mean hit rate   mean DRAM bytes   energy vs no cache\n";
    for (Scheme scheme : cs.schemes) {
        const double energy_ratio = energy_sum[scheme] > 0.0 ? no_cache_energy / energy_sum[scheme] : 0.0;
        schemes[std::string(to_string(scheme))] = {{"mean_hit_rate", hit_sum[scheme] / n},
                                                   {"mean_dram_bytes", bytes_sum[scheme] / n},
                                                   {"energy_saving_factor", energy_ratio}};
        log << std::left << std::setw(9) << to_string(scheme) << std::fixed << std::setprecision(4) << std::setw(16)
            << hit_sum[scheme] / n << std::setprecision(0) << std::setw(18) << bytes_sum[scheme] / n
            << std::setprecision(2) << energy_ratio << "x\n";
    }
    summary["schemes"] = schemes;
    write_json(summary, dir / "cache_summary.json");
    if (!ok) log << "conservation check FAILED\n";
    return ok ? kExitOk : kExitValidation;
}

int cmd_perf(const RunConfig& config, std::ostream& log) {
    const PerfConfig& pc = config.perf;
    const auto dir = prepare_out(config);
    const bool run_naive = pc.pipeline != PipelineMode::interleaved;
    const bool run_inter = pc.pipeline != PipelineMode::naive;
    json summary;
    bool ok = true;

    if (pc.workload == PerfWorkload::scene) {
        const LoadedScene s = load_scene(config.scene, config.seed);
        const FrameWorkload frame = frame_workload(project_scene(s.scene, pick_camera(s, config.render.camera)));
        summary["tiles"] = frame.tiles.size();
        summary["distinct_gaussians"] = frame.distinct_gaussians();
        std::optional<PipelineTrace> naive, inter;
        if (run_naive) {
            naive = simulate_naive_pipeline(frame, pc.hw);
            naive->write_csv(dir / "perf_naive.csv");
            summary["naive"] = naive->summary();
            log << "naive:       " << naive->total_cycles << " cycles, sort utilization " << std::fixed
                << std::setprecision(2) << 100.0 * naive->sort_utilization << "%\n";
        }
        if (run_inter) {
            inter = simulate_interleaved_pipeline(frame, pc.hw);
            inter->write_csv(dir / "perf_interleaved.csv");
            summary["interleaved"] = inter->summary();
            log << "interleaved: " << inter->total_cycles << " cycles over " << inter->subtiles << " subtiles\n";
        }
        if (naive && inter) {
            ok = inter->total_cycles <= naive->total_cycles;
            summary["speedup"] = inter->total_cycles ? double(naive->total_cycles) / double(inter->total_cycles) : 0.0;
        }
    } else {
        std::uint64_t strict = 0, equal_single = 0, equal_multi = 0, violations = 0;
        std::ofstream csv(dir / "perf_random.csv");
        if (!csv) throw Error("cannot write " + (dir / "perf_random.csv").string());
        csv << "seed,naive_cycles,interleaved_cycles,subtiles\n";
        for (std::uint32_t i = 0; i < pc.random_seeds; ++i) {
            const FrameWorkload f = random_frame_workload(config.seed + i);
            const auto n = simulate_naive_pipeline(f, pc.hw);
            const auto a = simulate_interleaved_pipeline(f, pc.hw);
            csv << config.seed + i << ',' << n.total_cycles << ',' << a.total_cycles << ',' << a.subtiles << '\n';
            if (a.total_cycles < n.total_cycles) ++strict;
            else if (a.total_cycles > n.total_cycles) ++violations;
            else (a.subtiles <= 1 ? equal_single : equal_multi)++;
        }
        ok = violations == 0;
        summary["random"] = {{"workloads", pc.random_seeds},          {"interleaved_faster", strict},
                             {"equal_single_subtile", equal_single},  {"equal_multi_subtile", equal_multi},
                             {"interleaved_slower", violations}};
        log << pc.random_seeds << " random workloads: interleaved faster " << strict << ", equal "
            << equal_single + equal_multi << " (" << equal_multi << " with several subtiles), slower " << violations
            << '\n';
    }

    const RooflinePoint r = roofline_point(RooflineMode::raster, pc.hw);
    const RooflinePoint s = roofline_point(RooflineMode::sort, pc.hw);
    auto point = [](const RooflinePoint& p) {
        return json{{"intensity", p.intensity},
                    {"attainable", p.attainable},
                    {"peak", p.peak},
                    {"bound", p.memory_bound ? "memory" : "compute"}};
    };
    summary["roofline"] = {{"raster", point(r)}, {"sort", point(s)}, {"intensity_ratio", r.intensity / s.intensity}};
    write_json(summary, dir / "perf.json");
    log << std::fixed << std::setprecision(2) << "roofline: raster " << r.intensity << " MAC/B ("
        << (r.memory_bound ? "memory" : "compute") << "-bound), sort " << s.intensity << " MAC/B ("
        << (s.memory_bound ? "memory" : "compute") << "-bound), ratio " << r.intensity / s.intensity << '\n';
    return ok ? kExitOk : kExitValidation;
}

LeakyReluScan scan_leaky_relu() {
    LeakyReluScan s;
    for (std::uint32_t b = 0; b < 65536; ++b) {
        const Fp16 x = Fp16::from_bits(std::uint16_t(b));
        const LeakyReluHwResult hw = leaky_relu_hw_detail(x);
        ++s.patterns;
        const Fp16Class cls = x.classify();
        if (cls == Fp16Class::zero || cls == Fp16Class::infinity || cls == Fp16Class::nan) {
            ++s.special_total;
            if (hw.value == x) ++s.special_unchanged;
            continue;
        }
        if (!x.sign()) {
            ++s.positive_total;
            if (hw.value == x) ++s.positive_unchanged;
            continue;
        }
        if (cls == Fp16Class::subnormal) {
            ++s.negative_subnormal_total;
            if (hw.value == x) ++s.negative_subnormal_unchanged;
            continue;
        }
        ++s.negative_normal_total;
        const Fp16 exact = round_to_fp16(x.to_double() / 8.0);
        if (hw.value != exact) ++s.mismatches;
        if (hw.underflow_fallback) {
            ++s.fallback;
            const auto shifted = std::uint16_t((x.bits & ~0x7C00u) | ((x.exponent_field() - 3u) & 0x1Fu) << 10);
            if (Fp16::from_bits(shifted) != exact) ++s.fallback_trick_would_differ;
        } else if (hw.value == exact) {
            ++s.trick_exact;
        }
    }
    return s;
}

int cmd_fp16scan(const RunConfig& config, std::ostream& log) {
    const LeakyReluScan s = scan_leaky_relu();
    const json j{{"patterns", s.patterns},
                 {"positive", {{"total", s.positive_total}, {"unchanged", s.positive_unchanged}}},
                 {"negative_subnormal",
                  {{"total", s.negative_subnormal_total}, {"unchanged", s.negative_subnormal_unchanged}}},
                 {"negative_normal",
                  {{"total", s.negative_normal_total},
                   {"exponent_shift_exact", s.trick_exact},
                   {"underflow_fallback", s.fallback},
                   {"fallback_where_shift_is_wrong", s.fallback_trick_would_differ},
                   {"mismatches", s.mismatches}}},
                 {"special", {{"total", s.special_total}, {"unchanged", s.special_unchanged}}}};
    const auto dir = prepare_out(config);
    write_json(j, dir / "fp16scan.json");
    log << "65536 patterns: " << s.trick_exact << " negative normals exact via exponent shift, " << s.fallback
        << " exponent-underflow fallbacks, " << s.mismatches << " mismatches; " << s.positive_unchanged << '/'
        << s.positive_total << " positives and " << s.negative_subnormal_unchanged << '/'
        << s.negative_subnormal_total << " negative subnormals unchanged\n";
    const bool ok = s.mismatches == 0 && s.positive_unchanged == s.positive_total &&
                    s.negative_subnormal_unchanged == s.negative_subnormal_total &&
                    s.special_unchanged == s.special_total;
    return ok ? kExitOk : kExitValidation;
}

} // namespace splatsim::cli
