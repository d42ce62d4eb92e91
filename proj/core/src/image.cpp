#include "splatsim/image.hpp"

#include "splatsim/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace splatsim {

void Image::clamp01() {
    for (double& v : data) v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.data.size());
    std::transform(image.data.begin(), image.data.end(), bytes.begin(), [](double v) {
        const double encoded = std::pow(std::clamp(v, 0.0, 1.0), 1.0 / 2.2);
        return static_cast<unsigned char>(std::lround(encoded * 255.0));
    });
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void write_raw(const Image& image, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        for (double v : image.data) {
            const auto f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof f);
        }
    }
    std::ofstream side(path.string() + ".json");
    side << nlohmann::json{{"width", image.width}, {"height", image.height}, {"channels", 3}}.dump() << "\n";
}

Image read_raw(const std::filesystem::path& path) {
    std::ifstream side(path.string() + ".json");
    if (!side) throw FormatError("missing sidecar " + path.string() + ".json");
    const auto meta = nlohmann::json::parse(side);
    if (meta.at("channels").get<int>() != 3) throw FormatError("raw image must have 3 channels");
    Image image(meta.at("width").get<std::uint32_t>(), meta.at("height").get<std::uint32_t>());
    std::ifstream in(path, std::ios::binary);
    for (double& v : image.data) {
        float f = 0.0f;
        if (!in.read(reinterpret_cast<char*>(&f), sizeof f)) throw FormatError("truncated raw image " + path.string());
        v = f;
    }
    return image;
}

} // namespace splatsim
