#include "splatsim/scene.hpp"

#include "splatsim/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace splatsim {

static_assert(std::endian::native == std::endian::little, "file I/O assumes a little-endian host");

namespace {

constexpr double kShC0 = 0.28209479177387814;

} // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double Gaussian3D::opacity() const { return sigmoid(opacity_logit); }

Eigen::Vector3d Gaussian3D::scale() const {
    return {std::exp(double(log_scale[0])), std::exp(double(log_scale[1])), std::exp(double(log_scale[2]))};
}

Eigen::Vector3d Gaussian3D::position() const { return {mean[0], mean[1], mean[2]}; }

Eigen::Vector4d Gaussian3D::normalized_rotation() const {
    Eigen::Vector4d q(rotation[0], rotation[1], rotation[2], rotation[3]);
    const double n = q.norm();
    if (n == 0.0) throw Error("zero quaternion");
    return q / n;
}

void Camera::validate(double tolerance) const {
    if (width == 0 || height == 0) throw Error("camera image size must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera focal lengths must be positive");
    const double err = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(err <= tolerance)) {
        std::ostringstream msg;
        msg << "camera rotation is not orthonormal (max error " << err << ")";
        throw Error(msg.str());
    }
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                       std::uint32_t width, std::uint32_t height, double fov_y_radians, double near) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    cam.width = width;
    cam.height = height;
    cam.fy = 0.5 * height / std::tan(0.5 * fov_y_radians);
    cam.fx = cam.fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.near = near;
    return cam;
}

Scene::Scene(std::vector<Gaussian3D> gaussians) : gaussians_(std::move(gaussians)) {
    if (gaussians_.size() > std::size_t(kMaxGaussianId) + 1) throw Error("scene exceeds 2^28 Gaussians");
}

void Scene::push_back(const Gaussian3D& g) {
    if (gaussians_.size() > kMaxGaussianId) throw Error("scene exceeds 2^28 Gaussians");
    gaussians_.push_back(g);
}

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

namespace {

struct PlyProperty {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool is_float32 = false;
};

std::size_t ply_type_size(const std::string& type) {
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},   {"uchar", 1},  {"int8", 1},    {"uint8", 1},   {"short", 2},  {"ushort", 2},
        {"int16", 2},  {"uint16", 2}, {"int", 4},     {"uint", 4},    {"int32", 4},  {"uint32", 4},
        {"float", 4},  {"float32", 4}, {"double", 8}, {"float64", 8}};
    const auto it = sizes.find(type);
    if (it == sizes.end()) throw ParseError("PLY: unsupported property type '" + type + "'");
    return it->second;
}

std::vector<std::string> gs_property_names() {
    std::vector<std::string> names = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 45; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.insert(names.end(), {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"});
    return names;
}

// f_rest is channel-major: f_rest[c * 15 + (k - 1)] holds sh[k][c].
int rest_index(int k, int channel) { return channel * 15 + (k - 1); }

} // namespace

Scene load_gs_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("PLY: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw ParseError("PLY: missing 'ply' magic");

    bool format_ok = false;
    bool in_vertex = false;
    bool seen_vertex = false;
    std::uint64_t vertex_count = 0;
    std::size_t stride = 0;
    std::vector<PlyProperty> props;
    for (;;) {
        if (!std::getline(in, line)) throw ParseError("PLY: unexpected end of header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream tok(line);
        std::string word;
        tok >> word;
        if (word == "end_header") break;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string fmt;
            tok >> fmt;
            if (fmt != "binary_little_endian")
                throw ParseError("PLY: unsupported format '" + fmt + "' (only binary_little_endian)");
            format_ok = true;
        } else if (word == "element") {
            std::string name;
            std::uint64_t count = 0;
            tok >> name >> count;
            if (seen_vertex && name != "vertex") {
                // Elements after the vertex block are never read.
                in_vertex = false;
                continue;
            }
            if (name != "vertex") throw ParseError("PLY: element '" + name + "' precedes the vertex element");
            in_vertex = true;
            seen_vertex = true;
            vertex_count = count;
        } else if (word == "property") {
            if (!in_vertex) continue;
            std::string type, name;
            tok >> type;
            if (type == "list") throw ParseError("PLY: list properties are not supported in the vertex element");
            tok >> name;
            const std::size_t size = ply_type_size(type);
            props.push_back({name, stride, size, type == "float" || type == "float32"});
            stride += size;
        } else {
            throw ParseError("PLY: unrecognised header line '" + line + "'");
        }
    }
    if (!format_ok) throw ParseError("PLY: missing format line");
    if (!seen_vertex) throw ParseError("PLY: missing vertex element");
    if (vertex_count > std::uint64_t(kMaxGaussianId) + 1)
        throw Error("PLY: " + std::to_string(vertex_count) + " vertices exceed the 2^28 Gaussian ID capacity");

    const auto names = gs_property_names();
    std::vector<std::size_t> offsets;
    offsets.reserve(names.size());
    for (const auto& name : names) {
        const auto it = std::find_if(props.begin(), props.end(), [&](const PlyProperty& p) { return p.name == name; });
        if (it == props.end()) throw ParseError("PLY: missing vertex property '" + name + "'");
        if (!it->is_float32) throw ParseError("PLY: vertex property '" + name + "' must be float32");
        offsets.push_back(it->offset);
    }

    std::vector<char> record(stride);
    std::vector<Gaussian3D> gaussians;
    gaussians.reserve(vertex_count);
    auto read_f = [&](std::size_t field) {
        float v = 0.0f;
        std::memcpy(&v, record.data() + offsets[field], sizeof v);
        return v;
    };
    for (std::uint64_t i = 0; i < vertex_count; ++i) {
        if (!in.read(record.data(), std::streamsize(stride)))
            throw ParseError("PLY: truncated vertex data at vertex " + std::to_string(i));
        Gaussian3D g;
        for (int j = 0; j < 3; ++j) g.mean[j] = read_f(j);
        for (int c = 0; c < 3; ++c) g.sh[0][c] = read_f(3 + c);
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k < kShCoefficients; ++k) g.sh[k][c] = read_f(6 + rest_index(k, c));
        g.opacity_logit = read_f(51);
        for (int j = 0; j < 3; ++j) g.log_scale[j] = read_f(52 + j);
        for (int j = 0; j < 4; ++j) g.rotation[j] = read_f(55 + j);
        gaussians.push_back(g);
    }
    return Scene(std::move(gaussians));
}

void save_gs_ply(const Scene& scene, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("PLY: cannot write " + path.string());
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
    for (const auto& name : gs_property_names()) out << "property float " << name << "\n";
    out << "end_header\n";
    std::array<float, 59> rec{};
    for (const auto& g : scene.gaussians()) {
        for (int j = 0; j < 3; ++j) rec[j] = g.mean[j];
        for (int c = 0; c < 3; ++c) rec[3 + c] = g.sh[0][c];
        for (int c = 0; c < 3; ++c)
            for (int k = 1; k < kShCoefficients; ++k) rec[6 + rest_index(k, c)] = g.sh[k][c];
        rec[51] = g.opacity_logit;
        for (int j = 0; j < 3; ++j) rec[52 + j] = g.log_scale[j];
        for (int j = 0; j < 4; ++j) rec[55 + j] = g.rotation[j];
        out.write(reinterpret_cast<const char*>(rec.data()), sizeof rec);
    }
    if (!out) throw Error("PLY: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Native container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'A', 'T', 'S', 'I', 'M'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const char* what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError(std::string("native: truncated file reading ") + what);
    return v;
}

} // namespace

void save_native(const Scene& scene, const std::vector<Camera>& cameras, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("native: cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kNativeVersion);
    put<std::uint64_t>(out, scene.size());
    for (const auto& g : scene.gaussians()) {
        for (float v : g.mean) put(out, v);
        for (float v : g.log_scale) put(out, v);
        for (float v : g.rotation) put(out, v);
        put(out, g.opacity_logit);
        for (const auto& coeff : g.sh)
            for (float v : coeff) put(out, v);
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cameras.size()));
    for (const auto& cam : cameras) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) put(out, float(cam.rotation(r, c)));
        for (int j = 0; j < 3; ++j) put(out, float(cam.translation[j]));
        put(out, float(cam.fx));
        put(out, float(cam.fy));
        put(out, float(cam.cx));
        put(out, float(cam.cy));
        put<std::uint32_t>(out, cam.width);
        put<std::uint32_t>(out, cam.height);
        put(out, float(cam.near));
    }
    if (!out) throw Error("native: write failed for " + path.string());
}

NativeBundle load_native(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("native: cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw FormatError("native: bad magic (expected SPLATSIM)");
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kNativeVersion)
        throw FormatError("native: unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kNativeVersion) + ")");
    const auto count = get<std::uint64_t>(in, "gaussian count");
    if (count > std::uint64_t(kMaxGaussianId) + 1) throw FormatError("native: gaussian count exceeds 2^28");

    NativeBundle bundle;
    std::vector<Gaussian3D> gaussians;
    for (std::uint64_t i = 0; i < count; ++i) {
        Gaussian3D g;
        for (float& v : g.mean) v = get<float>(in, "gaussian");
        for (float& v : g.log_scale) v = get<float>(in, "gaussian");
        for (float& v : g.rotation) v = get<float>(in, "gaussian");
        g.opacity_logit = get<float>(in, "gaussian");
        for (auto& coeff : g.sh)
            for (float& v : coeff) v = get<float>(in, "gaussian");
        gaussians.push_back(g);
    }
    bundle.scene = Scene(std::move(gaussians));
    const auto cams = get<std::uint32_t>(in, "camera count");
    for (std::uint32_t i = 0; i < cams; ++i) {
        Camera cam;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cam.rotation(r, c) = get<float>(in, "camera");
        for (int j = 0; j < 3; ++j) cam.translation[j] = get<float>(in, "camera");
        cam.fx = get<float>(in, "camera");
        cam.fy = get<float>(in, "camera");
        cam.cx = get<float>(in, "camera");
        cam.cy = get<float>(in, "camera");
        cam.width = get<std::uint32_t>(in, "camera");
        cam.height = get<std::uint32_t>(in, "camera");
        cam.near = get<float>(in, "camera");
        bundle.cameras.push_back(cam);
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

namespace {

void set_rgb(Gaussian3D& g, const Eigen::Vector3d& rgb) {
    for (int c = 0; c < 3; ++c) g.sh[0][c] = static_cast<float>((rgb[c] - 0.5) / kShC0);
}

Eigen::Vector3d layer_color(int layer) {
    static const std::array<Eigen::Vector3d, 8> palette = {
        Eigen::Vector3d(0.9, 0.2, 0.2), Eigen::Vector3d(0.2, 0.8, 0.3), Eigen::Vector3d(0.2, 0.3, 0.9),
        Eigen::Vector3d(0.9, 0.8, 0.2), Eigen::Vector3d(0.8, 0.3, 0.8), Eigen::Vector3d(0.2, 0.8, 0.8),
        Eigen::Vector3d(0.95, 0.6, 0.3), Eigen::Vector3d(0.6, 0.6, 0.6)};
    return palette[std::size_t(layer) % palette.size()];
}

} // namespace

std::vector<Camera> orbit_cameras(const SyntheticSpec& spec) {
    std::vector<Camera> cams;
    const double fov = spec.fov_y_degrees * std::numbers::pi / 180.0;
    const double arc = spec.orbit_arc_degrees * std::numbers::pi / 180.0;
    for (int i = 0; i < spec.camera_count; ++i) {
        // Cameras on a cone of half-angle arc/2 around +z; the first one (or the only one) on the axis.
        Eigen::Vector3d eye(0.0, 0.0, spec.orbit_radius);
        if (spec.camera_count > 1 && i > 0) {
            const double azimuth = 2.0 * std::numbers::pi * (i - 1) / (spec.camera_count - 1);
            const double tilt = 0.5 * arc;
            eye = spec.orbit_radius * Eigen::Vector3d(std::sin(tilt) * std::cos(azimuth),
                                                      std::sin(tilt) * std::sin(azimuth), std::cos(tilt));
        }
        cams.push_back(Camera::look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 1, 0), spec.width,
                                       spec.height, fov));
    }
    return cams;
}

SyntheticScene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.count == 0) throw Error("synthetic scene needs at least one Gaussian");
    if (spec.camera_count < 1) throw Error("synthetic scene needs at least one camera");
    if (spec.preset == SyntheticPreset::layers && spec.layers < 1) throw Error("layers preset needs >= 1 layer");
    if (!(spec.opacity_min > 0.0 && spec.opacity_max < 1.0 && spec.opacity_min <= spec.opacity_max))
        throw Error("synthetic opacity range must lie inside (0,1)");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SyntheticScene out;
    out.cameras = orbit_cameras(spec);
    std::vector<Gaussian3D> gaussians;

    switch (spec.preset) {
    case SyntheticPreset::single: {
        Gaussian3D g;
        const float s = static_cast<float>(std::log(0.5 * (spec.scale_min + spec.scale_max)));
        g.log_scale = {s, s, s};
        g.opacity_logit = static_cast<float>(logit(spec.opacity_max));
        set_rgb(g, spec.color == ColorMode::gray ? Eigen::Vector3d(0.5, 0.5, 0.5) : Eigen::Vector3d(0.9, 0.6, 0.2));
        gaussians.push_back(g);
        for (std::size_t i = 1; i < spec.count; ++i) {
            Gaussian3D extra = g;
            for (float& m : extra.mean) m = static_cast<float>(uniform(-spec.extent, spec.extent));
            gaussians.push_back(extra);
        }
        break;
    }
    case SyntheticPreset::random: {
        for (std::size_t i = 0; i < spec.count; ++i) {
            Gaussian3D g;
            for (float& m : g.mean) m = static_cast<float>(uniform(-spec.extent, spec.extent));
            for (float& s : g.log_scale) s = static_cast<float>(std::log(uniform(spec.scale_min, spec.scale_max)));
            Eigen::Vector4d q(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
            q.normalize();
            for (int j = 0; j < 4; ++j) g.rotation[j] = static_cast<float>(q[j]);
            g.opacity_logit = static_cast<float>(logit(uniform(spec.opacity_min, spec.opacity_max)));
            Eigen::Vector3d rgb(unit(rng), unit(rng), unit(rng));
            if (spec.color == ColorMode::gray) rgb.setConstant(0.5);
            set_rgb(g, rgb);
            gaussians.push_back(g);
        }
        break;
    }
    case SyntheticPreset::layers: {
        // Sheets perpendicular to z, front sheet nearest the +z cameras.
        const int k = spec.layers;
        const double gap = k > 1 ? spec.extent / (k - 1) : 0.0;
        for (std::size_t i = 0; i < spec.count; ++i) {
            const int layer = static_cast<int>(i % std::size_t(k));
            Gaussian3D g;
            const double z = 0.5 * spec.extent - layer * gap;
            g.mean = {static_cast<float>(uniform(-spec.extent, spec.extent)),
                      static_cast<float>(uniform(-spec.extent, spec.extent)), static_cast<float>(z)};
            const double sxy = uniform(spec.scale_min, spec.scale_max);
            g.log_scale = {static_cast<float>(std::log(sxy)), static_cast<float>(std::log(sxy)),
                           static_cast<float>(std::log(0.25 * spec.scale_min))};
            const double angle = uniform(0.0, std::numbers::pi);
            g.rotation = {static_cast<float>(std::cos(0.5 * angle)), 0.0f, 0.0f, static_cast<float>(std::sin(0.5 * angle))};
            g.opacity_logit = static_cast<float>(logit(uniform(spec.opacity_min, spec.opacity_max)));
            Eigen::Vector3d rgb = layer_color(layer);
            if (spec.color == ColorMode::random) rgb = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
            if (spec.color == ColorMode::gray) rgb.setConstant(0.5);
            set_rgb(g, rgb);
            gaussians.push_back(g);
        }
        break;
    }
    }
    out.scene = Scene(std::move(gaussians));
    return out;
}

} // namespace splatsim
