#include "splatsim/neuralsort.hpp"

#include "splatsim/error.hpp"
#include "splatsim/metrics.hpp"
#include "splatsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace splatsim {

void TrainConfig::validate() const {
    if (!(mlp_lr >= 0.0) || !(gaussian_lr_factor >= 0.0) || !(opacity_base_lr >= 0.0) || !(color_base_lr >= 0.0)) {
        throw ConfigError("learning rates must be non-negative");
    }
    if (!(ssim_weight >= 0.0 && ssim_weight <= 1.0)) throw ConfigError("ssim_weight must be in [0, 1]");
    if (depth_norm == DepthNorm::fixed && !(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
    if (eval_every == 0) throw ConfigError("eval_every must be positive");
    shape.validate();
}

LossResult image_loss(const Image& rendered, const Image& gt, double lambda) {
    if (!rendered.same_shape(gt)) throw Error("loss: image dimensions differ");
    LossResult r;
    const std::size_t n = rendered.data.size();
    r.grad.assign(n, 0.0);
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rendered.data[i] - gt.data[i];
        l1 += std::abs(d);
        r.grad[i] = (1.0 - lambda) * (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / double(n);
    }
    r.l1 = l1 / double(n);
    r.value = (1.0 - lambda) * r.l1;
    if (lambda > 0.0) {
        const SsimResult s = ssim_with_gradient(rendered, gt);
        r.ssim = s.value;
        r.value += lambda * (1.0 - s.value);
        for (std::size_t i = 0; i < n; ++i) r.grad[i] -= lambda * s.grad[i];
    } else if (rendered.width >= std::uint32_t(kSsimWindow) && rendered.height >= std::uint32_t(kSsimWindow)) {
        r.ssim = ssim(rendered, gt);
    } else {
        r.ssim = std::numeric_limits<double>::quiet_NaN();  // too small for the window; not needed at lambda 0
    }
    return r;
}

TrainProblem::TrainProblem(const Scene& scene, std::vector<Camera> cameras, std::vector<Image> ground_truth,
                           const TrainConfig& config)
    : scene_(scene), config_(config), gaussian_count_(scene.size()), ground_truth_(std::move(ground_truth)) {
    config_.validate();
    if (cameras.size() != ground_truth_.size()) throw ConfigError("one ground-truth image per camera is required");
    if (cameras.empty()) throw ConfigError("training needs at least one camera");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const Camera& cam = cameras[v];
        if (ground_truth_[v].width != cam.width || ground_truth_[v].height != cam.height) {
            throw ConfigError("ground-truth image size does not match camera " + std::to_string(v));
        }
        const ProjectionResult proj = project_scene(scene_, cam);
        const auto depths = normalized_depths(proj, config_.depth_norm, config_.depth_scale);
        View view;
        view.width = cam.width;
        view.height = cam.height;
        view.depth.assign(gaussian_count_, nan);
        view.rgb_offset.assign(gaussian_count_, {0.0, 0.0, 0.0});

        const std::size_t pixels = std::size_t(cam.width) * cam.height;
        std::vector<std::vector<Footprint>> per_pixel(pixels);
        const TileGeometry& geo = proj.grid.geometry;
        for (std::size_t i = 0; i < proj.gaussians.size(); ++i) {
            const ProjectedGaussian& pg = proj.gaussians[i];
            view.depth[pg.id] = depths[i];
            for (int ch = 0; ch < 3; ++ch) view.rgb_offset[pg.id][ch] = pg.rgb[ch] - kShC0 * scene_[pg.id].sh[0][ch];
            for (const TileCoord tc : assign_tiles(pg, geo)) {
                const std::uint32_t ox = tc.tx * kTileSize, oy = tc.ty * kTileSize;
                const std::uint32_t x1 = std::min<std::uint32_t>(ox + kTileSize, cam.width);
                const std::uint32_t y1 = std::min<std::uint32_t>(oy + kTileSize, cam.height);
                for (std::uint32_t y = oy; y < y1; ++y)
                    for (std::uint32_t x = ox; x < x1; ++x) {
                        const double g = std::exp(pg.exponent(double(x) - pg.mean_x, double(y) - pg.mean_y));
                        // o < 1, so alpha < g; pairs below the skip threshold never contribute.
                        if (g > 0.0 && g >= config_.alpha_skip) {
                            per_pixel[std::size_t(y) * cam.width + x].push_back({pg.id, g});
                        }
                    }
            }
        }
        view.pixel_begin.resize(pixels + 1, 0);
        for (std::size_t p = 0; p < pixels; ++p) {
            view.pixel_begin[p + 1] = view.pixel_begin[p] + std::uint32_t(per_pixel[p].size());
        }
        view.entries.reserve(view.pixel_begin.back());
        for (auto& list : per_pixel) view.entries.insert(view.entries.end(), list.begin(), list.end());
        views_.push_back(std::move(view));
    }
}

TrainState TrainProblem::initial_state(const DecayMlp& mlp) const {
    TrainState s;
    s.mlp = mlp;
    s.opacity_logit.resize(gaussian_count_);
    s.sh_dc.resize(gaussian_count_);
    for (std::size_t i = 0; i < gaussian_count_; ++i) {
        s.opacity_logit[i] = scene_[i].opacity_logit;
        for (int ch = 0; ch < 3; ++ch) s.sh_dc[i][ch] = scene_[i].sh[0][ch];
    }
    return s;
}

struct TrainProblem::Forward {
    std::vector<double> decay, opacity;
    std::vector<std::array<double, 3>> rgb;
    std::vector<double> denom;  // per pixel
    std::vector<double> raw;    // unclamped color, Image::data layout
    Image image;                // clamped
};

TrainProblem::Forward TrainProblem::run_forward(const TrainState& state, std::size_t view_index) const {
    const View& view = views_.at(view_index);
    const std::size_t n = gaussian_count_;
    Forward f;
    f.decay.assign(n, 0.0);
    f.opacity.assign(n, 0.0);
    f.rgb.assign(n, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(view.depth[i])) continue;
        f.decay[i] = state.mlp.forward(view.depth[i]);
        f.opacity[i] = sigmoid(state.opacity_logit[i]);
        for (int ch = 0; ch < 3; ++ch)
            f.rgb[i][ch] = std::max(0.0, view.rgb_offset[i][ch] + kShC0 * state.sh_dc[i][ch]);
    }

    const std::size_t pixels = std::size_t(view.width) * view.height;
    f.image = Image(view.width, view.height);
    f.denom.assign(pixels, 0.0);
    f.raw.assign(pixels * 3, 0.0);
    for (std::size_t p = 0; p < pixels; ++p) {
        std::array<double, 3> num{};
        double den = 0.0;
        for (std::uint32_t e = view.pixel_begin[p]; e < view.pixel_begin[p + 1]; ++e) {
            const Footprint& fp = view.entries[e];
            const double alpha = std::min(f.opacity[fp.gaussian] * fp.geometry, config_.alpha_cap);
            if (alpha < config_.alpha_skip) continue;
            const double w = f.decay[fp.gaussian] * alpha;
            for (int ch = 0; ch < 3; ++ch) num[ch] += w * f.rgb[fp.gaussian][ch];
            den += w;
        }
        f.denom[p] = den;
        if (den > 0.0) {
            for (int ch = 0; ch < 3; ++ch) {
                f.raw[p * 3 + ch] = num[ch] / den;
                f.image.data[p * 3 + ch] = std::clamp(f.raw[p * 3 + ch], 0.0, 1.0);
            }
        }
    }
    return f;
}

Image TrainProblem::render(const TrainState& state, std::size_t view_index) const {
    return run_forward(state, view_index).image;
}

double TrainProblem::evaluate(const TrainState& state, std::size_t view_index, TrainGradient* grad) const {
    const View& view = views_.at(view_index);
    const std::size_t n = gaussian_count_;
    const Forward f = run_forward(state, view_index);
    const LossResult loss = image_loss(f.image, ground_truth_[view_index], config_.ssim_weight);
    if (!grad) return loss.value;

    grad->loss = loss.value;
    grad->mlp.assign(state.mlp.params().size(), 0.0);
    grad->opacity_logit.assign(n, 0.0);
    grad->sh_dc.assign(n, {0.0, 0.0, 0.0});
    std::vector<double> d_decay(n, 0.0), d_opacity(n, 0.0);
    std::vector<std::array<double, 3>> d_rgb(n, {0.0, 0.0, 0.0});
    for (std::size_t p = 0; p < f.denom.size(); ++p) {
        const double den = f.denom[p];
        if (!(den > 0.0)) continue;
        std::array<double, 3> g{};
        bool any = false;
        for (int ch = 0; ch < 3; ++ch) {
            const double c = f.raw[p * 3 + ch];
            g[ch] = (c >= 0.0 && c <= 1.0) ? loss.grad[p * 3 + ch] : 0.0;
            any = any || g[ch] != 0.0;
        }
        if (!any) continue;
        for (std::uint32_t e = view.pixel_begin[p]; e < view.pixel_begin[p + 1]; ++e) {
            const Footprint& fp = view.entries[e];
            const std::uint32_t i = fp.gaussian;
            const double unclamped = f.opacity[i] * fp.geometry;
            const double alpha = std::min(unclamped, config_.alpha_cap);
            if (alpha < config_.alpha_skip) continue;
            const double w = f.decay[i] * alpha;
            double d_w = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                d_w += g[ch] * (f.rgb[i][ch] - f.raw[p * 3 + ch]) / den;
                d_rgb[i][ch] += g[ch] * w / den;
            }
            d_decay[i] += d_w * alpha;
            if (unclamped < config_.alpha_cap) d_opacity[i] += d_w * f.decay[i] * fp.geometry;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(view.depth[i])) continue;
        grad->opacity_logit[i] = d_opacity[i] * f.opacity[i] * (1.0 - f.opacity[i]);
        for (int ch = 0; ch < 3; ++ch) {
            if (view.rgb_offset[i][ch] + kShC0 * state.sh_dc[i][ch] > 0.0) grad->sh_dc[i][ch] = kShC0 * d_rgb[i][ch];
        }
        if (d_decay[i] != 0.0) {
            const auto gm = state.mlp.backward(view.depth[i], d_decay[i]);
            for (std::size_t k = 0; k < gm.params.size(); ++k) grad->mlp[k] += gm.params[k];
        }
    }
    return loss.value;
}

Scene TrainProblem::apply(const TrainState& state) const {
    Scene out = scene_;
    for (std::size_t i = 0; i < gaussian_count_; ++i) {
        out[i].opacity_logit = float(state.opacity_logit[i]);
        for (int ch = 0; ch < 3; ++ch) out[i].sh[0][ch] = float(state.sh_dc[i][ch]);
    }
    return out;
}

Quality evaluate_quality(const TrainProblem& problem, const TrainState& state) {
    Quality q;
    for (std::size_t v = 0; v < problem.view_count(); ++v) {
        const Image img = problem.render(state, v);
        q.psnr += psnr(img, problem.ground_truth(v));
        const bool fits = img.width >= std::uint32_t(kSsimWindow) && img.height >= std::uint32_t(kSsimWindow);
        q.ssim += fits ? ssim(img, problem.ground_truth(v)) : std::numeric_limits<double>::quiet_NaN();
    }
    q.psnr /= double(problem.view_count());
    q.ssim /= double(problem.view_count());
    return q;
}

namespace {

class Adam {
public:
    explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, double lr, std::size_t t) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, double(t)), c2 = 1.0 - std::pow(b2, double(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
            params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

private:
    std::vector<double> m_, v_;
};

std::span<double> flat(std::vector<std::array<double, 3>>& v) { return {v.data()->data(), v.size() * 3}; }

} // namespace

TrainResult train(const TrainProblem& problem, const DecayMlp& initial, const TrainConfig& config) {
    config.validate();
    TrainState state = problem.initial_state(initial);
    TrainReport report;
    report.gaussians_before = problem.gaussian_count();

    const Quality q0 = evaluate_quality(problem, state);
    report.initial_psnr = q0.psnr;
    report.initial_ssim = q0.ssim;
    report.records.push_back({0, std::numeric_limits<double>::quiet_NaN(), q0.psnr, q0.ssim});

    Adam adam_mlp(state.mlp.params().size());
    Adam adam_opacity(state.opacity_logit.size());
    Adam adam_color(state.sh_dc.size() * 3);
    const double opacity_lr = config.opacity_base_lr * config.gaussian_lr_factor;
    const double color_lr = config.color_base_lr * config.gaussian_lr_factor;

    TrainGradient grad;
    Quality last = q0;
    for (std::size_t step = 1; step <= config.steps; ++step) {
        const std::size_t view = (step - 1) % problem.view_count();
        const double loss = problem.evaluate(state, view, &grad);
        bool finite = std::isfinite(loss);
        for (double g : grad.mlp) finite = finite && std::isfinite(g);
        if (!finite) {
            report.diverged = true;
            report.records.push_back({step, loss, std::nullopt, std::nullopt});
            break;
        }
        adam_mlp.step(state.mlp.params(), grad.mlp, config.mlp_lr, step);
        if (config.train_gaussians) {
            adam_opacity.step(state.opacity_logit, grad.opacity_logit, opacity_lr, step);
            adam_color.step(flat(state.sh_dc), flat(grad.sh_dc), color_lr, step);
        }
        report.steps_run = step;
        TrainRecord rec{step, loss, std::nullopt, std::nullopt};
        if (step % config.eval_every == 0 || step == config.steps) {
            last = evaluate_quality(problem, state);
            rec.psnr = last.psnr;
            rec.ssim = last.ssim;
        }
        report.records.push_back(rec);
    }
    if (report.diverged) last = evaluate_quality(problem, state);
    report.final_psnr = last.psnr;
    report.final_ssim = last.ssim;

    TrainResult result{state.mlp, problem.apply(state), {}};
    report.gaussians_after = result.scene.size();
    const double lo = config.depth_norm == DepthNorm::frame_max ? 0.5 : 0.0;
    report.monotone_fraction = monotone_fraction(state.mlp, lo, 1.0);
    result.report = std::move(report);
    return result;
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "step,loss,psnr,ssim\n" << std::setprecision(10);
    for (const auto& r : records) {
        out << r.step << ',';
        if (std::isfinite(r.loss)) out << r.loss;
        out << ',';
        if (r.psnr) out << *r.psnr;
        out << ',';
        if (r.ssim) out << *r.ssim;
        out << '\n';
    }
}

std::vector<Image> render_ground_truth(const Scene& scene, std::span<const Camera> cameras, unsigned threads) {
    std::vector<Image> out;
    out.reserve(cameras.size());
    RenderOptions options;
    options.threads = threads;
    for (const Camera& cam : cameras) out.push_back(render_frame(project_scene(scene, cam), options).image);
    return out;
}

std::vector<MlpShape> default_dse_variants() {
    std::vector<MlpShape> v;
    for (auto hidden : {HiddenActivation::relu, HiddenActivation::leaky_relu})
        for (auto output : {OutputActivation::sigmoid, OutputActivation::exp}) v.push_back({2, 3, hidden, output});
    for (auto [l, n] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{3, 3}})
        v.push_back({l, n, HiddenActivation::leaky_relu, OutputActivation::exp});
    return v;
}

std::vector<DseRow> dse_grid(const TrainProblem& problem, std::span<const MlpShape> variants,
                             const TrainConfig& config) {
    std::vector<DseRow> rows;
    for (const MlpShape& shape : variants) {
        shape.validate();
        TrainConfig c = config;
        c.shape = shape;
        const TrainResult r = train(problem, init_mlp(shape, config.seed), c);
        rows.push_back({shape, shape.mac_count(), shape.parameter_count(), r.report.initial_psnr, r.report.final_psnr,
                        r.report.final_ssim, r.report.diverged});
    }
    return rows;
}

} // namespace splatsim
