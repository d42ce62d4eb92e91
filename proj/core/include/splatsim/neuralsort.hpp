#pragma once

#include "splatsim/fp16.hpp"
#include "splatsim/image.hpp"
#include "splatsim/projection.hpp"
#include "splatsim/raster.hpp"
#include "splatsim/scene.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace splatsim {

// ---------------------------------------------------------------------------
// decay network
// ---------------------------------------------------------------------------

enum class DepthNorm : std::uint8_t { none, frame_max, fixed };

[[nodiscard]] std::string_view to_string(DepthNorm mode);
[[nodiscard]] DepthNorm parse_depth_norm(std::string_view name);

enum class HiddenActivation : std::uint8_t { relu, leaky_relu };
enum class OutputActivation : std::uint8_t { exp, sigmoid };

// Network shape. `layers` counts weight layers (input -> hidden ... -> output) and
// `neurons` the width of every hidden layer.
struct MlpShape {
    int layers = 2;
    int neurons = 3;
    HiddenActivation hidden = HiddenActivation::leaky_relu;
    OutputActivation output = OutputActivation::exp;

    void validate() const;  // layers and neurons in {2, 3}
    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] std::size_t mac_count() const;
    [[nodiscard]] std::string name() const;  // e.g. "2l-3n/leaky/exp"
    static MlpShape parse(std::string_view name);

    friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

// Fully connected scalar-to-scalar MLP. Parameters are flattened layer by layer,
// each layer as weights (row-major, out x in) followed by biases.
class DecayMlp {
public:
    DecayMlp() : DecayMlp(MlpShape{}) {}
    explicit DecayMlp(MlpShape shape);

    [[nodiscard]] const MlpShape& shape() const { return shape_; }
    [[nodiscard]] std::span<double> params() { return params_; }
    [[nodiscard]] std::span<const double> params() const { return params_; }

    // Views into layer l (0-based).
    [[nodiscard]] std::size_t in_width(int l) const;
    [[nodiscard]] std::size_t out_width(int l) const;
    [[nodiscard]] std::size_t weight_offset(int l) const;
    [[nodiscard]] std::size_t bias_offset(int l) const;

    [[nodiscard]] double forward(double d, const Alu& alu = Alu{}) const;

    struct Gradient {
        std::vector<double> params;
        double input = 0.0;
    };
    // Analytic gradient of upstream * F(d). At an activation kink the slope of the
    // positive side is used.
    [[nodiscard]] Gradient backward(double d, double upstream) const;

    friend bool operator==(const DecayMlp&, const DecayMlp&) = default;

private:
    MlpShape shape_;
    std::vector<double> params_;
};

// He-normal first (and hidden) layers, Xavier-uniform output layer, zero biases.
[[nodiscard]] DecayMlp init_mlp(const MlpShape& shape, std::uint64_t seed);

// The 2-layer, 3-neuron, 10-parameter network with Leaky ReLU and exp output.
struct DecayNet {
    std::array<double, 3> w1{}, b1{}, w2{};
    double b2 = 0.0;
    DepthNorm depth_norm = DepthNorm::frame_max;

    static constexpr std::size_t kParameters = 10;
    static constexpr std::size_t kMacs = 6;

    [[nodiscard]] DecayMlp to_mlp() const;
    static DecayNet from_mlp(const DecayMlp& mlp, DepthNorm norm = DepthNorm::frame_max);

    friend bool operator==(const DecayNet&, const DecayNet&) = default;
};

[[nodiscard]] DecayNet init_decaynet(std::uint64_t seed);

// h = leaky(w1 d + b1), F = exp(w2 . h + b2). In fp16 mode every MAC is rounded and
// the hardware Leaky ReLU is used.
[[nodiscard]] double decay_forward(const DecayNet& net, double d, Arith mode = Arith::exact);

struct DecayNetGradient {
    std::array<double, 3> w1{}, b1{}, w2{};
    double b2 = 0.0;
    double depth = 0.0;
};
[[nodiscard]] DecayNetGradient decay_backward(const DecayNet& net, double d, double upstream);

[[nodiscard]] nlohmann::json to_json(const DecayNet& net);
[[nodiscard]] DecayNet decaynet_from_json(const nlohmann::json& j);
void save_decaynet(const DecayNet& net, const std::filesystem::path& path);
[[nodiscard]] DecayNet load_decaynet(const std::filesystem::path& path);

// Generic form {shape, params, depth_norm}; used for DSE variants.
[[nodiscard]] nlohmann::json to_json(const DecayMlp& mlp, DepthNorm norm);
[[nodiscard]] DecayMlp mlp_from_json(const nlohmann::json& j);

// Per-frame depth normalization of the projected Gaussians' depths.
[[nodiscard]] std::vector<double> normalized_depths(const ProjectionResult& projection, DepthNorm norm,
                                                    double fixed_scale = 1.0);

// F(d) for every projected Gaussian, computed once per frame.
[[nodiscard]] std::vector<double> compute_decay(const ProjectionResult& projection, const DecayMlp& mlp, DepthNorm norm,
                                                Arith mode = Arith::exact, double fixed_scale = 1.0);

// Fixed-function weight F(d) = d^-k on raw depth.
[[nodiscard]] std::vector<double> fixed_power_decay(const ProjectionResult& projection, double k);

// Fraction of consecutive samples over [lo, hi] where F does not increase.
[[nodiscard]] double monotone_fraction(const DecayMlp& mlp, double lo, double hi, int samples = 256);

// ---------------------------------------------------------------------------
// weighted blending
// ---------------------------------------------------------------------------

// Separate numerator and denominator sums; 4 mul + 4 add per contribution and one
// division per channel when resolved.
class WeightedAccumulator {
public:
    void add(double alpha, const std::array<double, 3>& rgb, double decay, const Alu& alu, OpCounts& counts);
    [[nodiscard]] bool empty() const { return !(denominator_ > 0.0); }
    [[nodiscard]] double denominator() const { return denominator_; }
    [[nodiscard]] std::array<double, 3> resolve(const Alu& alu, OpCounts& counts) const;

private:
    std::array<double, 3> numerator_{};
    double denominator_ = 0.0;
};

struct WeightedBlendResult {
    std::array<double, 3> rgb{};
    bool zero_denominator = false;
};

// Order-independent blend; contributions are accumulated in ascending-ID order so
// the result is bit-identical under any permutation of the input.
[[nodiscard]] WeightedBlendResult blend_weighted(std::span<const Contribution> contributions, const Alu& alu,
                                                 const RasterParams& params, OpCounts& counts);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t steps = 2000;
    double mlp_lr = 0.005;
    double gaussian_lr_factor = 0.01;
    double opacity_base_lr = 0.05;
    double color_base_lr = 0.0025;
    double ssim_weight = 0.2;
    DepthNorm depth_norm = DepthNorm::frame_max;
    double depth_scale = 1.0;  // for DepthNorm::fixed
    MlpShape shape;
    std::uint64_t seed = 1;
    std::size_t eval_every = 100;
    double alpha_skip = 1.0 / 255.0;
    double alpha_cap = 0.99;
    bool train_gaussians = true;

    void validate() const;
};

// Trainable state: network plus per-Gaussian opacity logit and DC color.
struct TrainState {
    DecayMlp mlp;
    std::vector<double> opacity_logit;
    std::vector<std::array<double, 3>> sh_dc;
};

struct TrainGradient {
    std::vector<double> mlp;
    std::vector<double> opacity_logit;
    std::vector<std::array<double, 3>> sh_dc;
    double loss = 0.0;
};

struct LossResult {
    double value = 0.0;
    double l1 = 0.0;
    double ssim = 0.0;
    std::vector<double> grad;  // dLoss/dPixel, same layout as Image::data
};

// (1 - lambda) L1 + lambda (1 - SSIM), with the analytic per-pixel gradient.
[[nodiscard]] LossResult image_loss(const Image& rendered, const Image& gt, double lambda);

// Precomputed per-view footprints for fixed geometry. The geometry term
// G = exp(E) of every (Gaussian, pixel) pair is stored once; alpha = min(o G, cap).
class TrainProblem {
public:
    TrainProblem(const Scene& scene, std::vector<Camera> cameras, std::vector<Image> ground_truth,
                 const TrainConfig& config);

    [[nodiscard]] std::size_t view_count() const { return views_.size(); }
    [[nodiscard]] std::size_t gaussian_count() const { return gaussian_count_; }
    [[nodiscard]] const Image& ground_truth(std::size_t view) const { return ground_truth_[view]; }
    [[nodiscard]] const TrainConfig& config() const { return config_; }

    [[nodiscard]] TrainState initial_state(const DecayMlp& mlp) const;

    // Weighted forward render of one view (unclamped colors are clamped to [0,1]).
    [[nodiscard]] Image render(const TrainState& state, std::size_t view) const;

    // Loss of one view and, if `grad` is set, its analytic gradient.
    double evaluate(const TrainState& state, std::size_t view, TrainGradient* grad) const;

    // Writes the trained opacity and DC color back into a copy of the scene.
    [[nodiscard]] Scene apply(const TrainState& state) const;

private:
    struct Forward;
    [[nodiscard]] Forward run_forward(const TrainState& state, std::size_t view) const;

    struct Footprint {
        std::uint32_t gaussian;
        double geometry;  // exp(E)
    };
    struct View {
        std::uint32_t width = 0, height = 0;
        std::vector<std::uint32_t> pixel_begin;  // CSR offsets, size pixels + 1
        std::vector<Footprint> entries;
        std::vector<double> depth;                      // normalized, per Gaussian (NaN if not visible)
        std::vector<std::array<double, 3>> rgb_offset;  // rgb minus C0 * dc at the checkpoint
    };

    Scene scene_;
    TrainConfig config_;
    std::size_t gaussian_count_ = 0;
    std::vector<View> views_;
    std::vector<Image> ground_truth_;
};

struct TrainRecord {
    std::size_t step = 0;
    double loss = 0.0;
    std::optional<double> psnr, ssim;
};

struct TrainReport {
    std::vector<TrainRecord> records;
    double initial_psnr = 0.0, final_psnr = 0.0;
    double initial_ssim = 0.0, final_ssim = 0.0;
    std::size_t gaussians_before = 0, gaussians_after = 0;
    std::size_t steps_run = 0;
    bool diverged = false;
    double monotone_fraction = 0.0;  // diagnostic only

    void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
    DecayMlp mlp;
    Scene scene;
    TrainReport report;
};

// Mean PSNR/SSIM of the weighted render against ground truth over every view.
struct Quality {
    double psnr = 0.0, ssim = 0.0;
};
[[nodiscard]] Quality evaluate_quality(const TrainProblem& problem, const TrainState& state);

// Adam over the trainable state, cycling through views one per step.
[[nodiscard]] TrainResult train(const TrainProblem& problem, const DecayMlp& initial, const TrainConfig& config);

// Sorted renders of every camera, used as ground truth.
[[nodiscard]] std::vector<Image> render_ground_truth(const Scene& scene, std::span<const Camera> cameras,
                                                     unsigned threads = 0);

struct DseRow {
    MlpShape shape;
    std::size_t macs = 0;
    std::size_t params = 0;
    double psnr_before = 0.0, psnr_after = 0.0;
    double ssim_after = 0.0;
    bool diverged = false;
};

// The activation grid (ReLU/Leaky ReLU x sigmoid/exp) at 2l-3n and the structure
// grid (2l-2n, 2l-3n, 3l-2n, 3l-3n) with Leaky ReLU and exp.
[[nodiscard]] std::vector<MlpShape> default_dse_variants();
[[nodiscard]] std::vector<DseRow> dse_grid(const TrainProblem& problem, std::span<const MlpShape> variants,
                                           const TrainConfig& config);

} // namespace splatsim
