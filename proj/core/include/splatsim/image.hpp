#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace splatsim {

// Linear-light RGB image, row-major, channels interleaved.
struct Image {
    std::uint32_t width = 0, height = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h, double fill = 0.0) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

    [[nodiscard]] std::size_t pixel_count() const { return std::size_t(width) * height; }
    [[nodiscard]] std::size_t offset(std::uint32_t x, std::uint32_t y) const { return (std::size_t(y) * width + x) * 3; }
    [[nodiscard]] double& at(std::uint32_t x, std::uint32_t y, int c) { return data[offset(x, y) + c]; }
    [[nodiscard]] double at(std::uint32_t x, std::uint32_t y, int c) const { return data[offset(x, y) + c]; }
    [[nodiscard]] bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

    void clamp01();

    friend bool operator==(const Image&, const Image&) = default;
};

// Binary P6, maxval 255, sRGB-ish encoding with gamma 1/2.2.
void write_ppm(const Image& image, const std::filesystem::path& path);

// Flat float32 little-endian samples plus "<path>.json" = {width, height, channels}.
void write_raw(const Image& image, const std::filesystem::path& path);
[[nodiscard]] Image read_raw(const std::filesystem::path& path);

} // namespace splatsim
