#pragma once

#include "splatsim/image.hpp"

#include <vector>

namespace splatsim {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// 10 log10(1 / MSE) over all channels; +inf when the images are identical.
[[nodiscard]] double psnr(const Image& a, const Image& b);

// Gaussian-window SSIM over the valid region, averaged over channels.
[[nodiscard]] double ssim(const Image& a, const Image& b);

struct SsimResult {
    double value = 0.0;
    std::vector<double> grad;  // d ssim / d a, Image::data layout
};
[[nodiscard]] SsimResult ssim_with_gradient(const Image& a, const Image& b);

struct QualityReport {
    double psnr = 0.0;
    double ssim = 0.0;
};
[[nodiscard]] QualityReport compare(const Image& a, const Image& b);

} // namespace splatsim
