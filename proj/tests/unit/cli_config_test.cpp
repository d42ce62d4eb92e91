#include "splatsim/cli/commands.hpp"
#include "splatsim/cli/config.hpp"
#include "splatsim/error.hpp"
#include "splatsim/image.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace splatsim;
using namespace splatsim::cli;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("splatsim_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig small_scene_config(const std::string& out) {
    return parse_run_config(json{
        {"out", fresh_dir(out).string()},
        {"scene", {{"synthetic", {{"preset", "layers"}, {"count", 60}, {"width", 32}, {"height", 32}, {"cameras", 2}}}}}});
}

} // namespace

TEST(RunConfig, DefaultsFromEmptyObject) {
    const RunConfig c = parse_run_config(json::object());
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.render.mode, RenderMode::sorted);
    EXPECT_EQ(c.cache.cache.sets(), 704u);
    EXPECT_EQ(c.cache.schemes.size(), 4u);
    EXPECT_EQ(c.train.train.steps, 2000u);
}

TEST(RunConfig, ParsesNestedSections) {
    const RunConfig c = parse_run_config(json::parse(R"({
        "seed": 9,
        "scene": {"source": "synthetic", "synthetic": {"preset": "layers", "count": 300, "color": "per_layer"}},
        "render": {"mode": "weighted_fixed", "k": 2, "arith": "fp16", "background": [0.1, 0.2, 0.3]},
        "train": {"steps": 10, "shape": "3l-2n/relu/sigmoid", "depth_norm": "none"},
        "sched": {"schemes": ["z", "pi"], "tiles_x": 8},
        "cache": {"working_set_fraction": 0.05, "seeds": 3, "multitile": {"gaussians": 100}},
        "perf": {"pipeline": "interleaved", "hw": {"dram_gb_per_s": 19.2}}
    })"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.scene.synthetic.preset, SyntheticPreset::layers);
    EXPECT_EQ(c.scene.synthetic.count, 300u);
    EXPECT_EQ(c.render.arith, Arith::fp16);
    EXPECT_DOUBLE_EQ(c.render.raster.background[2], 0.3);
    EXPECT_EQ(c.train.train.shape.layers, 3);
    EXPECT_EQ(c.sched.schemes, (std::vector<Scheme>{Scheme::z, Scheme::pi}));
    EXPECT_DOUBLE_EQ(*c.cache.working_set_fraction, 0.05);
    EXPECT_EQ(c.cache.multitile.gaussians, 100u);
    EXPECT_DOUBLE_EQ(c.perf.hw.dram_gb_per_s, 19.2);
}

TEST(RunConfig, RejectsUnknownKeysAnywhere) {
    for (const char* text : {R"({"sead": 1})", R"({"render": {"mdoe": "sorted"}})",
                             R"({"scene": {"synthetic": {"cout": 3}}})", R"({"perf": {"hw": {"pes": 4}}})",
                             R"({"cache": {"dram": {"latency": 3}}})"}) {
        EXPECT_THROW((void)parse_run_config(json::parse(text)), ConfigError) << text;
    }
    try {
        (void)parse_run_config(json::parse(R"({"render": {"mdoe": "sorted"}})"));
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("render.mdoe"), std::string::npos);
    }
}

TEST(RunConfig, RejectsBadValues) {
    for (const char* text :
         {R"({"seed": -1})", R"({"seed": "one"})", R"({"render": {"mode": "painter"}})",
          R"({"render": {"mode": "weighted_learned"}})", R"({"render": {"background": [0, 0]}})",
          R"({"scene": {"source": "ply"}})", R"({"train": {"ssim_weight": 2}})", R"({"train": {"shape": "4l-3n"}})",
          R"({"sched": {"schemes": []}})", R"({"sched": {"pi_block": 6}})", R"({"cache": {"capacity_bytes": 100}})",
          R"({"cache": {"working_set_fraction": 0}})", R"({"perf": {"pipeline": "fast"}})",
          R"({"render": {"arith": "bf16"}})", R"([1, 2])"}) {
        EXPECT_THROW((void)parse_run_config(json::parse(text)), ConfigError) << text;
    }
}

TEST(RunConfig, LoadsFromFile) {
    const auto dir = fresh_dir("load");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "c.json") << R"({"seed": 4})";
    EXPECT_EQ(load_run_config(dir / "c.json").seed, 4u);
    std::ofstream(dir / "bad.json") << "{";
    EXPECT_THROW((void)load_run_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW((void)load_run_config(dir / "missing.json"), ConfigError);
}

TEST(CmdRender, SingleGaussianCountsMatchClosedForm) {
    RunConfig c = parse_run_config(json{
        {"out", fresh_dir("render_single").string()},
        {"scene", {{"synthetic", {{"preset", "single"}, {"count", 1}, {"width", 48}, {"height", 48}}}}}});
    std::ostringstream log;
    ASSERT_EQ(cmd_render(c, log), kExitOk);
    const json s = read_json(c.out / "render_stats.json");
    const std::uint64_t evals = s["gaussian_tile_evaluations"];
    EXPECT_EQ(evals, s["gaussian_tile_pairs"].get<std::uint64_t>());
    EXPECT_GT(evals, 0u);
    EXPECT_EQ(s["ops"]["alpha"]["mul"].get<std::uint64_t>() + s["ops"]["axis_lines"]["mul"].get<std::uint64_t>(),
              576u * evals);
    EXPECT_EQ(s["ops"]["alpha"]["add"].get<std::uint64_t>() + s["ops"]["axis_lines"]["add"].get<std::uint64_t>(),
              560u * evals);
    EXPECT_EQ(s["ops"]["blending"]["mul"].get<std::uint64_t>(), 5u * s["blended_contributions"].get<std::uint64_t>());
    EXPECT_NEAR(s["alpha_mac_reduction_percent"].get<double>(), 63.02, 0.01);
    const Image img = read_raw(c.out / "render.raw");
    EXPECT_GT(img.at(24, 24, 0), 0.1);
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_TRUE(std::filesystem::exists(c.out / "render.ppm"));
}

TEST(CmdRender, ZeroNetMatchesUnitWeights) {
    RunConfig fixed = small_scene_config("render_fixed");
    fixed.render.mode = RenderMode::weighted_fixed;
    fixed.render.k = 0.0;
    std::ostringstream log;
    ASSERT_EQ(cmd_render(fixed, log), kExitOk);

    RunConfig learned = small_scene_config("render_learned");
    std::filesystem::create_directories(learned.out);
    save_decaynet(DecayNet{}, learned.out / "zero.json");
    learned.render.mode = RenderMode::weighted_learned;
    learned.render.net = learned.out / "zero.json";
    ASSERT_EQ(cmd_render(learned, log), kExitOk);
    EXPECT_EQ(read_file(fixed.out / "render.raw"), read_file(learned.out / "render.raw"));
}

TEST(CmdRender, Deterministic) {
    RunConfig a = small_scene_config("render_a");
    RunConfig b = small_scene_config("render_b");
    std::ostringstream log;
    ASSERT_EQ(cmd_render(a, log), kExitOk);
    ASSERT_EQ(cmd_render(b, log), kExitOk);
    EXPECT_EQ(read_file(a.out / "render.raw"), read_file(b.out / "render.raw"));
    EXPECT_EQ(read_file(a.out / "render_stats.json"), read_file(b.out / "render_stats.json"));
    a.render.camera = 5;
    EXPECT_THROW(cmd_render(a, log), ConfigError);
}

TEST(CmdSched, PiSixteenBySixteen) {
    RunConfig c = parse_run_config(json{{"out", fresh_dir("sched").string()}, {"sched", {{"schemes", {"pi"}}}}});
    std::ostringstream log;
    ASSERT_EQ(cmd_sched(c, log), kExitOk);
    std::ifstream in(c.out / "trajectory_pi.csv");
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 256);
    EXPECT_NE(log.str().find("permutation verified"), std::string::npos);
}

TEST(CmdFp16Scan, Counts) {
    const LeakyReluScan s = scan_leaky_relu();
    EXPECT_EQ(s.patterns, 65536u);
    EXPECT_EQ(s.negative_normal_total, 30720u);
    EXPECT_EQ(s.trick_exact, 27648u);
    EXPECT_EQ(s.fallback, 3072u);
    EXPECT_EQ(s.fallback_trick_would_differ, 3072u);
    EXPECT_EQ(s.mismatches, 0u);
    EXPECT_EQ(s.positive_unchanged, s.positive_total);
    EXPECT_EQ(s.negative_subnormal_unchanged, 1023u);
    RunConfig c = parse_run_config(json{{"out", fresh_dir("fp16").string()}});
    std::ostringstream log;
    EXPECT_EQ(cmd_fp16scan(c, log), kExitOk);
    EXPECT_EQ(read_json(c.out / "fp16scan.json")["negative_normal"]["mismatches"], 0);
}

TEST(CmdCache, SmallSweep) {
    RunConfig c = parse_run_config(json{{"out", fresh_dir("cache").string()},
                                        {"cache",
                                         {{"working_set_fraction", 0.05},
                                          {"seeds", 3},
                                          {"multitile", {{"tiles_x", 16}, {"tiles_y", 16}, {"gaussians", 1000}}}}}});
    std::ostringstream log;
    ASSERT_EQ(cmd_cache(c, log), kExitOk);
    const json s = read_json(c.out / "cache_summary.json");
    EXPECT_TRUE(s["conservation_ok"].get<bool>());
    EXPECT_EQ(s["runs"], 3);
    EXPECT_GT(s["schemes"]["pi"]["mean_hit_rate"].get<double>(), s["schemes"]["raster"]["mean_hit_rate"].get<double>());
    std::ifstream in(c.out / "cache.csv");
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 12);
}

TEST(CmdPerf, SceneAndRandomWorkloads) {
    RunConfig c = small_scene_config("perf");
    std::ostringstream log;
    ASSERT_EQ(cmd_perf(c, log), kExitOk);
    json s = read_json(c.out / "perf.json");
    EXPECT_LE(s["interleaved"]["cycles"].get<std::uint64_t>(), s["naive"]["cycles"].get<std::uint64_t>());
    EXPECT_EQ(s["roofline"]["sort"]["bound"], "memory");
    EXPECT_EQ(s["roofline"]["raster"]["bound"], "compute");
    c.perf.workload = PerfWorkload::random;
    c.perf.random_seeds = 50;
    ASSERT_EQ(cmd_perf(c, log), kExitOk);
    s = read_json(c.out / "perf.json");
    EXPECT_EQ(s["random"]["interleaved_slower"], 0);
}

TEST(CmdTrain, ZeroLearningRateSmokeRun) {
    RunConfig c = small_scene_config("train_lr0");
    c.train.train.steps = 3;
    c.train.train.mlp_lr = 0.0;
    c.train.train.gaussian_lr_factor = 0.0;
    std::ostringstream log;
    ASSERT_EQ(cmd_train(c, log), kExitOk);
    const json s = read_json(c.out / "train_summary.json");
    EXPECT_EQ(s["steps_run"], 3);
    EXPECT_EQ(s["initial_psnr"], s["final_psnr"]);
    EXPECT_EQ(s["gaussians_before"], s["gaussians_after"]);
    EXPECT_EQ(mlp_from_json(read_json(c.out / "net.json")), init_mlp(MlpShape{}, c.seed));
    EXPECT_TRUE(std::filesystem::exists(c.out / "train_report.csv"));
    EXPECT_EQ(load_native(c.out / "trained_scene.splat").cameras.size(), 2u);
}

TEST(CmdTrain, StartingNetFileReproducesFreshRun) {
    RunConfig fresh = small_scene_config("train_fresh");
    fresh.train.train.steps = 20;
    std::ostringstream log;
    ASSERT_EQ(cmd_train(fresh, log), kExitOk);

    RunConfig from_file = small_scene_config("train_from_file");
    fresh.train.train.steps = 20;
    from_file.train.train.steps = 20;
    std::filesystem::create_directories(from_file.out);
    save_decaynet(DecayNet::from_mlp(init_mlp(MlpShape{}, from_file.seed)), from_file.out / "init.json");
    from_file.train.init_net = from_file.out / "init.json";
    ASSERT_EQ(cmd_train(from_file, log), kExitOk);
    EXPECT_EQ(read_file(fresh.out / "net.json"), read_file(from_file.out / "net.json"));
    EXPECT_EQ(read_file(fresh.out / "train_report.csv"), read_file(from_file.out / "train_report.csv"));
}

TEST(CmdDse, TwoVariants) {
    RunConfig c = small_scene_config("dse");
    c.train.train.steps = 5;
    c.dse.variants = {MlpShape::parse("2l-2n"), MlpShape::parse("3l-3n/relu/sigmoid")};
    std::ostringstream log;
    ASSERT_EQ(cmd_dse(c, log), kExitOk);
    std::ifstream in(c.out / "dse.csv");
    std::string header, r1, r2;
    std::getline(in, header);
    std::getline(in, r1);
    std::getline(in, r2);
    EXPECT_EQ(r1.rfind("2l-2n/leaky/exp,4,", 0), 0u);
    EXPECT_EQ(r2.rfind("3l-3n/relu/sigmoid,15,", 0), 0u);
}

TEST(RunConfig, ShippedConfigsParse) {
    int files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(SPLATSIM_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW((void)load_run_config(entry.path())) << entry.path();
        ++files;
    }
    EXPECT_GE(files, 5);
}
