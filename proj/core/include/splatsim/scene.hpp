#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace splatsim {

inline constexpr std::uint32_t kMaxGaussianId = (1u << 28) - 1;  // cache tags are 28 bits
inline constexpr int kShCoefficients = 16;                        // degree <= 3
inline constexpr int kParamsPerGaussian = 3 + 3 + 4 + 1 + 3 * kShCoefficients;  // 59

// One 3D Gaussian, stored activation-free as in standard checkpoints: scale in
// log space and opacity as a logit. Fields are float so that every file format
// round-trips bit-exactly.
struct Gaussian3D {
    std::array<float, 3> mean{};
    std::array<float, 3> log_scale{};
    std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f};  // (w, x, y, z), not necessarily unit
    float opacity_logit = 0.0f;
    // sh[k][channel]; k = 0 is the DC term.
    std::array<std::array<float, 3>, kShCoefficients> sh{};

    [[nodiscard]] double opacity() const;
    [[nodiscard]] Eigen::Vector3d scale() const;
    [[nodiscard]] Eigen::Vector3d position() const;
    [[nodiscard]] Eigen::Vector4d normalized_rotation() const;

    friend bool operator==(const Gaussian3D&, const Gaussian3D&) = default;
};

[[nodiscard]] constexpr std::size_t parameter_count(const Gaussian3D&) { return kParamsPerGaussian; }
[[nodiscard]] double sigmoid(double x);
[[nodiscard]] double logit(double p);

// Pinhole camera, world-to-camera: p_cam = R p_world + t.
struct Camera {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    std::uint32_t width = 1, height = 1;
    double near = 0.01;

    [[nodiscard]] Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

    // Throws on non-positive size/focal length or a rotation that is not
    // orthonormal within `tolerance`.
    void validate(double tolerance = 1e-9) const;

    // Camera at `eye` looking at `target`, +y image axis pointing along -up.
    static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up,
                          std::uint32_t width, std::uint32_t height, double fov_y_radians, double near = 0.01);

    friend bool operator==(const Camera&, const Camera&) = default;
};

// A scene's Gaussian IDs are their indices; the container enforces the 28-bit bound.
class Scene {
public:
    Scene() = default;
    explicit Scene(std::vector<Gaussian3D> gaussians);

    [[nodiscard]] std::size_t size() const { return gaussians_.size(); }
    [[nodiscard]] bool empty() const { return gaussians_.empty(); }
    [[nodiscard]] const std::vector<Gaussian3D>& gaussians() const { return gaussians_; }
    [[nodiscard]] std::vector<Gaussian3D>& gaussians() { return gaussians_; }
    [[nodiscard]] const Gaussian3D& operator[](std::size_t id) const { return gaussians_[id]; }
    [[nodiscard]] Gaussian3D& operator[](std::size_t id) { return gaussians_[id]; }

    void push_back(const Gaussian3D& g);

    friend bool operator==(const Scene&, const Scene&) = default;

private:
    std::vector<Gaussian3D> gaussians_;
};

// Binary little-endian 3DGS PLY.
[[nodiscard]] Scene load_gs_ply(const std::filesystem::path& path);
void save_gs_ply(const Scene& scene, const std::filesystem::path& path);

// Native "SPLATSIM" v1 container. Cameras are stored as float32, so a loaded
// camera equals the float-rounded original.
inline constexpr std::uint32_t kNativeVersion = 1;
struct NativeBundle {
    Scene scene;
    std::vector<Camera> cameras;
};
void save_native(const Scene& scene, const std::vector<Camera>& cameras, const std::filesystem::path& path);
[[nodiscard]] NativeBundle load_native(const std::filesystem::path& path);

enum class SyntheticPreset : std::uint8_t { random, single, layers };
enum class ColorMode : std::uint8_t { random, per_layer, gray };

// How ground-truth images are produced for a synthetic scene.
enum class GroundTruthPolicy : std::uint8_t { sorted_blend };

struct SyntheticSpec {
    SyntheticPreset preset = SyntheticPreset::random;
    std::size_t count = 64;
    int layers = 5;                 // layers preset only
    double extent = 1.0;            // half-width of the populated region (world units)
    double opacity_min = 0.3, opacity_max = 0.9;
    double scale_min = 0.05, scale_max = 0.2;  // world units, pre-log
    ColorMode color = ColorMode::random;
    int camera_count = 1;
    double orbit_radius = 4.0;
    double orbit_arc_degrees = 30.0;  // cameras spread over this arc around the +z view
    std::uint32_t width = 64, height = 64;
    double fov_y_degrees = 40.0;
};

struct SyntheticScene {
    Scene scene;
    std::vector<Camera> cameras;
    GroundTruthPolicy ground_truth = GroundTruthPolicy::sorted_blend;
};

[[nodiscard]] SyntheticScene make_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed);

// The synthetic camera rig alone: the first camera on +z, the rest on a cone of
// half-angle orbit_arc_degrees / 2 around it, all looking at the origin.
[[nodiscard]] std::vector<Camera> orbit_cameras(const SyntheticSpec& spec);

} // namespace splatsim
