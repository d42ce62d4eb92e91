#pragma once

#include "splatsim/cli/config.hpp"

#include <ostream>

namespace splatsim::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // bad config, unreadable input, module error
inline constexpr int kExitValidation = 2;  // outputs written but a self-check failed
inline constexpr int kExitDiverged = 3;    // training stopped on a non-finite loss

struct LoadedScene {
    Scene scene;
    std::vector<Camera> cameras;
};
[[nodiscard]] LoadedScene load_scene(const SceneConfig& config, std::uint64_t seed);

// Each command writes its files under config.out (created if missing) and a short
// human-readable summary to `log`. Errors are thrown; the entry point maps them to kExitError.
int cmd_render(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_dse(const RunConfig& config, std::ostream& log);
int cmd_sched(const RunConfig& config, std::ostream& log);
int cmd_cache(const RunConfig& config, std::ostream& log);
int cmd_perf(const RunConfig& config, std::ostream& log);
int cmd_fp16scan(const RunConfig& config, std::ostream& log);

// Exhaustive comparison of the hardware Leaky ReLU against exactly rounded x/8.
struct LeakyReluScan {
    std::uint32_t patterns = 0;
    std::uint32_t positive_unchanged = 0, positive_total = 0;
    std::uint32_t negative_subnormal_unchanged = 0, negative_subnormal_total = 0;
    std::uint32_t negative_normal_total = 0;
    std::uint32_t trick_exact = 0;            // exponent shift applied and equal to round(x/8)
    std::uint32_t fallback = 0;               // exponent field 1..3, exact x/8 used instead
    std::uint32_t fallback_trick_would_differ = 0;  // where a bare shift would have been wrong
    std::uint32_t mismatches = 0;             // hardware result != round(x/8) on a negative normal
    std::uint32_t special_unchanged = 0, special_total = 0;  // zeros, infinities, NaNs
};
[[nodiscard]] LeakyReluScan scan_leaky_relu();

} // namespace splatsim::cli
