#include "splatsim/neuralsort.hpp"

#include "splatsim/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <tuple>

namespace splatsim {

std::string_view to_string(DepthNorm mode) {
    switch (mode) {
        case DepthNorm::none: return "none";
        case DepthNorm::frame_max: return "frame_max";
        case DepthNorm::fixed: return "fixed";
    }
    return "?";
}

DepthNorm parse_depth_norm(std::string_view name) {
    if (name == "none") return DepthNorm::none;
    if (name == "frame_max") return DepthNorm::frame_max;
    if (name == "fixed") return DepthNorm::fixed;
    throw ConfigError("unknown depth normalization '" + std::string(name) + "' (none|frame_max|fixed)");
}

void MlpShape::validate() const {
    if (layers < 2 || layers > 3) throw ConfigError("decay MLP: layers must be 2 or 3");
    if (neurons < 2 || neurons > 3) throw ConfigError("decay MLP: neurons must be 2 or 3");
}

std::size_t MlpShape::parameter_count() const {
    const std::size_t n = std::size_t(neurons);
    return (2 * n) + std::size_t(layers - 2) * (n * n + n) + (n + 1);
}

std::size_t MlpShape::mac_count() const {
    const std::size_t n = std::size_t(neurons);
    return n + std::size_t(layers - 2) * n * n + n;
}

std::string MlpShape::name() const {
    return std::to_string(layers) + "l-" + std::to_string(neurons) + "n/" +
           (hidden == HiddenActivation::relu ? "relu" : "leaky") + "/" +
           (output == OutputActivation::exp ? "exp" : "sigmoid");
}

MlpShape MlpShape::parse(std::string_view name) {
    MlpShape s;
    const std::string str(name);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto slash = str.find('/', start);
        parts.push_back(str.substr(start, slash - start));
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
    const std::string& structure = parts[0];
    if (structure.size() != 5 || structure[1] != 'l' || structure[2] != '-' || structure[4] != 'n') {
        throw ConfigError("bad MLP variant '" + str + "' (expected e.g. 2l-3n/leaky/exp)");
    }
    s.layers = structure[0] - '0';
    s.neurons = structure[3] - '0';
    if (parts.size() > 1) {
        if (parts[1] == "relu") s.hidden = HiddenActivation::relu;
        else if (parts[1] == "leaky") s.hidden = HiddenActivation::leaky_relu;
        else throw ConfigError("bad hidden activation '" + parts[1] + "' (relu|leaky)");
    }
    if (parts.size() > 2) {
        if (parts[2] == "exp") s.output = OutputActivation::exp;
        else if (parts[2] == "sigmoid") s.output = OutputActivation::sigmoid;
        else throw ConfigError("bad output activation '" + parts[2] + "' (exp|sigmoid)");
    }
    if (parts.size() > 3) throw ConfigError("bad MLP variant '" + str + "'");
    s.validate();
    return s;
}

DecayMlp::DecayMlp(MlpShape shape) : shape_(shape) {
    shape_.validate();
    params_.assign(shape_.parameter_count(), 0.0);
}

std::size_t DecayMlp::in_width(int l) const { return l == 0 ? 1 : std::size_t(shape_.neurons); }
std::size_t DecayMlp::out_width(int l) const { return l == shape_.layers - 1 ? 1 : std::size_t(shape_.neurons); }

std::size_t DecayMlp::weight_offset(int l) const {
    std::size_t off = 0;
    for (int i = 0; i < l; ++i) off += out_width(i) * (in_width(i) + 1);
    return off;
}

std::size_t DecayMlp::bias_offset(int l) const { return weight_offset(l) + out_width(l) * in_width(l); }

namespace {

double hidden_act(HiddenActivation act, double z, const Alu& alu) {
    if (act == HiddenActivation::leaky_relu) return alu.leaky_relu(z);
    return z >= 0.0 ? z : 0.0;
}

double hidden_slope(HiddenActivation act, double z) {
    if (z >= 0.0) return 1.0;
    return act == HiddenActivation::leaky_relu ? 0.125 : 0.0;
}

double output_act(OutputActivation act, double z, const Alu& alu) {
    if (act == OutputActivation::exp) return alu.exp(z);
    return alu.in(1.0 / (1.0 + std::exp(-z)));
}

} // namespace

double DecayMlp::forward(double d, const Alu& alu) const {
    std::vector<double> act{alu.in(d)}, next;
    for (int l = 0; l < shape_.layers; ++l) {
        const std::size_t nin = in_width(l), nout = out_width(l);
        const double* w = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        next.assign(nout, 0.0);
        for (std::size_t j = 0; j < nout; ++j) {
            double z = b[j];
            for (std::size_t i = 0; i < nin; ++i) z = alu.add(z, alu.mul(w[j * nin + i], act[i]));
            next[j] = l + 1 < shape_.layers ? hidden_act(shape_.hidden, z, alu) : output_act(shape_.output, z, alu);
        }
        act.swap(next);
    }
    return act[0];
}

DecayMlp::Gradient DecayMlp::backward(double d, double upstream) const {
    const int layers = shape_.layers;
    std::vector<std::vector<double>> acts(static_cast<std::size_t>(layers) + 1);
    std::vector<std::vector<double>> pre(static_cast<std::size_t>(layers));
    acts[0] = {d};
    const Alu exact;
    for (int l = 0; l < layers; ++l) {
        const std::size_t nin = in_width(l), nout = out_width(l);
        const double* w = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        pre[l].assign(nout, 0.0);
        acts[l + 1].assign(nout, 0.0);
        for (std::size_t j = 0; j < nout; ++j) {
            double z = b[j];
            for (std::size_t i = 0; i < nin; ++i) z += w[j * nin + i] * acts[l][i];
            pre[l][j] = z;
            acts[l + 1][j] = l + 1 < layers ? hidden_act(shape_.hidden, z, exact) : output_act(shape_.output, z, exact);
        }
    }

    Gradient g;
    g.params.assign(params_.size(), 0.0);
    const double f = acts[layers][0];
    std::vector<double> gz{upstream * (shape_.output == OutputActivation::exp ? f : f * (1.0 - f))};
    for (int l = layers - 1; l >= 0; --l) {
        const std::size_t nin = in_width(l), nout = out_width(l);
        const double* w = params_.data() + weight_offset(l);
        double* gw = g.params.data() + weight_offset(l);
        double* gb = g.params.data() + bias_offset(l);
        std::vector<double> ga(nin, 0.0);
        for (std::size_t j = 0; j < nout; ++j) {
            gb[j] += gz[j];
            for (std::size_t i = 0; i < nin; ++i) {
                gw[j * nin + i] += gz[j] * acts[l][i];
                ga[i] += w[j * nin + i] * gz[j];
            }
        }
        if (l == 0) {
            g.input = ga[0];
            break;
        }
        gz.assign(nin, 0.0);
        for (std::size_t i = 0; i < nin; ++i) gz[i] = ga[i] * hidden_slope(shape_.hidden, pre[l - 1][i]);
    }
    return g;
}

DecayMlp init_mlp(const MlpShape& shape, std::uint64_t seed) {
    DecayMlp mlp(shape);
    std::mt19937_64 rng(seed);
    auto p = mlp.params();
    for (int l = 0; l < shape.layers; ++l) {
        const std::size_t nin = mlp.in_width(l), nout = mlp.out_width(l);
        double* w = p.data() + mlp.weight_offset(l);
        if (l + 1 < shape.layers) {
            std::normal_distribution<double> he(0.0, std::sqrt(2.0 / double(nin)));
            for (std::size_t i = 0; i < nin * nout; ++i) w[i] = he(rng);
        } else {
            const double limit = std::sqrt(6.0 / double(nin + nout));
            std::uniform_real_distribution<double> xavier(-limit, limit);
            for (std::size_t i = 0; i < nin * nout; ++i) w[i] = xavier(rng);
        }
    }
    return mlp;
}

DecayMlp DecayNet::to_mlp() const {
    DecayMlp mlp;
    auto p = mlp.params();
    std::copy(w1.begin(), w1.end(), p.begin());
    std::copy(b1.begin(), b1.end(), p.begin() + 3);
    std::copy(w2.begin(), w2.end(), p.begin() + 6);
    p[9] = b2;
    return mlp;
}

DecayNet DecayNet::from_mlp(const DecayMlp& mlp, DepthNorm norm) {
    if (!(mlp.shape() == MlpShape{})) throw ConfigError("DecayNet needs the 2l-3n/leaky/exp shape");
    DecayNet net;
    const auto p = mlp.params();
    std::copy(p.begin(), p.begin() + 3, net.w1.begin());
    std::copy(p.begin() + 3, p.begin() + 6, net.b1.begin());
    std::copy(p.begin() + 6, p.begin() + 9, net.w2.begin());
    net.b2 = p[9];
    net.depth_norm = norm;
    return net;
}

DecayNet init_decaynet(std::uint64_t seed) { return DecayNet::from_mlp(init_mlp(MlpShape{}, seed)); }

double decay_forward(const DecayNet& net, double d, Arith mode) { return net.to_mlp().forward(d, Alu(mode)); }

DecayNetGradient decay_backward(const DecayNet& net, double d, double upstream) {
    const auto g = net.to_mlp().backward(d, upstream);
    DecayNetGradient out;
    std::copy(g.params.begin(), g.params.begin() + 3, out.w1.begin());
    std::copy(g.params.begin() + 3, g.params.begin() + 6, out.b1.begin());
    std::copy(g.params.begin() + 6, g.params.begin() + 9, out.w2.begin());
    out.b2 = g.params[9];
    out.depth = g.input;
    return out;
}

nlohmann::json to_json(const DecayNet& net) {
    return {{"w1", net.w1}, {"b1", net.b1}, {"w2", net.w2}, {"b2", {net.b2}},
            {"depth_norm", std::string(to_string(net.depth_norm))}};
}

namespace {

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != N) {
        throw ConfigError(std::string("decay net JSON: '") + key + "' must be an array of " + std::to_string(N));
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!j[key][i].is_number()) throw ConfigError(std::string("decay net JSON: '") + key + "' must be numeric");
        out[i] = j[key][i].get<double>();
    }
    return out;
}

} // namespace

DecayNet decaynet_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("decay net JSON must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "w1" && key != "b1" && key != "w2" && key != "b2" && key != "depth_norm") {
            throw ConfigError("decay net JSON: unknown key '" + key + "'");
        }
    }
    DecayNet net;
    net.w1 = read_array<3>(j, "w1");
    net.b1 = read_array<3>(j, "b1");
    net.w2 = read_array<3>(j, "w2");
    net.b2 = read_array<1>(j, "b2")[0];
    if (j.contains("depth_norm")) net.depth_norm = parse_depth_norm(j["depth_norm"].get<std::string>());
    return net;
}

nlohmann::json to_json(const DecayMlp& mlp, DepthNorm norm) {
    const auto p = mlp.params();
    return {{"shape", mlp.shape().name()},
            {"params", std::vector<double>(p.begin(), p.end())},
            {"depth_norm", std::string(to_string(norm))}};
}

DecayMlp mlp_from_json(const nlohmann::json& j) {
    if (j.is_object() && j.contains("w1")) return decaynet_from_json(j).to_mlp();
    if (!j.is_object() || !j.contains("shape") || !j.contains("params")) {
        throw ConfigError("decay MLP JSON needs either {w1,b1,w2,b2} or {shape, params}");
    }
    DecayMlp mlp(MlpShape::parse(j["shape"].get<std::string>()));
    const auto params = j["params"].get<std::vector<double>>();
    if (params.size() != mlp.params().size()) {
        throw ConfigError("decay MLP JSON: expected " + std::to_string(mlp.params().size()) + " params, got " +
                          std::to_string(params.size()));
    }
    std::copy(params.begin(), params.end(), mlp.params().begin());
    return mlp;
}

void save_decaynet(const DecayNet& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(net).dump(2) << '\n';
}

DecayNet load_decaynet(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    try {
        return decaynet_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<double> normalized_depths(const ProjectionResult& projection, DepthNorm norm, double fixed_scale) {
    std::vector<double> d(projection.gaussians.size());
    double scale = 1.0;
    if (norm == DepthNorm::frame_max) {
        double max_depth = 0.0;
        for (const auto& pg : projection.gaussians) max_depth = std::max(max_depth, pg.depth);
        if (max_depth > 0.0) scale = max_depth;
    } else if (norm == DepthNorm::fixed) {
        if (!(fixed_scale > 0.0)) throw ConfigError("fixed depth scale must be positive");
        scale = fixed_scale;
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = projection.gaussians[i].depth / scale;
    return d;
}

std::vector<double> compute_decay(const ProjectionResult& projection, const DecayMlp& mlp, DepthNorm norm, Arith mode,
                                  double fixed_scale) {
    const auto depths = normalized_depths(projection, norm, fixed_scale);
    const Alu alu(mode);
    std::vector<double> f(depths.size());
    for (std::size_t i = 0; i < depths.size(); ++i) f[i] = mlp.forward(depths[i], alu);
    return f;
}

std::vector<double> fixed_power_decay(const ProjectionResult& projection, double k) {
    std::vector<double> f(projection.gaussians.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(projection.gaussians[i].depth, -k);
    return f;
}

double monotone_fraction(const DecayMlp& mlp, double lo, double hi, int samples) {
    if (samples < 2) return 1.0;
    int ok = 0;
    double prev = mlp.forward(lo);
    for (int i = 1; i < samples; ++i) {
        const double f = mlp.forward(lo + (hi - lo) * i / (samples - 1));
        if (f <= prev) ++ok;
        prev = f;
    }
    return double(ok) / double(samples - 1);
}

void WeightedAccumulator::add(double alpha, const std::array<double, 3>& rgb, double decay, const Alu& alu,
                              OpCounts& counts) {
    const double w = alu.mul(decay, alpha);
    for (int ch = 0; ch < 3; ++ch) numerator_[ch] = alu.add(numerator_[ch], alu.mul(w, rgb[ch]));
    denominator_ = alu.add(denominator_, w);
    counts.blending.mul += 4;
    counts.blending.add += 4;
}

std::array<double, 3> WeightedAccumulator::resolve(const Alu& alu, OpCounts& counts) const {
    std::array<double, 3> out{};
    for (int ch = 0; ch < 3; ++ch) out[ch] = alu.div(numerator_[ch], denominator_);
    counts.blending.div += 3;
    return out;
}

WeightedBlendResult blend_weighted(std::span<const Contribution> contributions, const Alu& alu,
                                   const RasterParams& params, OpCounts& counts) {
    std::vector<std::size_t> order(contributions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Full-key order so that duplicate IDs are also permutation invariant.
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const Contribution &a = contributions[l], &b = contributions[r];
        return std::tie(a.id, a.depth, a.alpha, a.decay, a.rgb) < std::tie(b.id, b.depth, b.alpha, b.decay, b.rgb);
    });
    WeightedAccumulator acc;
    for (std::size_t i : order) {
        const Contribution& c = contributions[i];
        if (c.alpha < params.alpha_skip) continue;
        acc.add(c.alpha, c.rgb, c.decay, alu, counts);
    }
    WeightedBlendResult r;
    if (acc.empty()) {
        r.rgb = params.background;
        r.zero_denominator = true;
    } else {
        r.rgb = acc.resolve(alu, counts);
    }
    return r;
}

} // namespace splatsim
