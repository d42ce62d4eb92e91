#include "splatsim/cli/commands.hpp"
#include "splatsim/error.hpp"
#include "splatsim/parallel.hpp"
#include "splatsim/schedule.hpp"

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

using namespace splatsim;

int main(int argc, char** argv) {
    CLI::App app{"splatsim: Gaussian splatting renderer and accelerator model"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "RunConfig JSON file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Seed (overrides the config)");
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_option("--threads", threads, "Worker threads (default: SPLATSIM_THREADS or 1)");

    using Command = std::function<int(const cli::RunConfig&, std::ostream&)>;
    const std::map<std::string, std::pair<std::string, Command>> commands{
        {"render", {"Render one view to PPM + raw float with stats JSON", cli::cmd_render}},
        {"train", {"Train the decay network against sorted ground truth", cli::cmd_train}},
        {"dse", {"Train every decay-network variant and tabulate quality", cli::cmd_dse}},
        {"sched", {"Write tile trajectories as CSV", cli::cmd_sched}},
        {"cache", {"Sweep cache hit rates over trajectories and seeds", cli::cmd_cache}},
        {"perf", {"Cycle model of the naive and interleaved pipelines", cli::cmd_perf}},
        {"fp16scan", {"Exhaustive scan of the FP16 Leaky ReLU unit", cli::cmd_fp16scan}},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands) subs[name] = app.add_subcommand(name, entry.first);

    // sched accepts "sched <scheme> <tiles_x> <tiles_y>" as a shorthand.
    std::string sched_scheme;
    std::uint32_t sched_x = 0, sched_y = 0;
    subs["sched"]->add_option("scheme", sched_scheme, "raster|s|z|pi");
    subs["sched"]->add_option("tiles_x", sched_x, "Grid width in tiles");
    subs["sched"]->add_option("tiles_y", sched_y, "Grid height in tiles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; every usage error maps to the generic error code.
        return app.exit(e) == 0 ? cli::kExitOk : cli::kExitError;
    }

    try {
        cli::RunConfig config = config_path.empty() ? cli::RunConfig{} : cli::load_run_config(config_path);
        if (seed) config.seed = *seed;
        if (!out_dir.empty()) config.out = out_dir;
        if (threads) config.threads = *threads;
        config.threads = resolve_threads(config.threads);
        if (!sched_scheme.empty()) config.sched.schemes = {parse_scheme(sched_scheme)};
        if (sched_x) config.sched.tiles_x = sched_x;
        if (sched_y) config.sched.tiles_y = sched_y;

        for (const auto& [name, entry] : commands) {
            if (subs[name]->parsed()) return entry.second(config, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitError;
    }
    return cli::kExitError;
}
