#pragma once

// Reference implementations used only by tests. They are written independently of
// the library code they check: slow, direct, and easy to read.

#include "splatsim/projection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Value of a binary16 pattern straight from the format definition.
inline double fp16_value(std::uint16_t bits) {
    const int sign = (bits >> 15) & 1;
    const int e = (bits >> 10) & 0x1F;
    const int m = bits & 0x3FF;
    double v;
    if (e == 0) {
        v = std::ldexp(double(m), -24);
    } else if (e == 31) {
        v = m ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    } else {
        v = std::ldexp(1.0 + m / 1024.0, e - 15);
    }
    return sign ? -v : v;
}

// Nearest-even rounding by search over a table of every finite non-negative value.
inline std::uint16_t nearest_fp16(double x) {
    static const std::vector<double> table = [] {
        std::vector<double> t;
        for (std::uint32_t b = 0; b <= 0x7BFF; ++b) t.push_back(fp16_value(std::uint16_t(b)));
        return t;
    }();
    if (std::isnan(x)) return 0x7E00;
    const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0;
    const double a = std::abs(x);
    // Largest finite value plus half an ulp (ulp = 32 at the top binade).
    if (a >= 65520.0) return sign | 0x7C00;
    // Positive patterns are ordered like their values; check both neighbours of x.
    const auto it = std::lower_bound(table.begin(), table.end(), a);
    std::size_t hi = std::size_t(it - table.begin());
    if (hi == table.size()) hi = table.size() - 1;
    const std::size_t lo = hi > 0 ? hi - 1 : 0;
    const double elo = std::abs(table[lo] - a), ehi = std::abs(table[hi] - a);
    std::size_t best = elo < ehi ? lo : hi;
    if (elo == ehi) best = (lo & 1) == 0 ? lo : hi;
    return std::uint16_t(sign | best);
}

inline bool fp16_is_nan(std::uint16_t b) { return ((b >> 10) & 0x1F) == 31 && (b & 0x3FF) != 0; }

// o exp(-1/2 d^T Sigma^-1 d), capped.
inline double alpha_matrix_form(const splatsim::ProjectedGaussian& pg, double px, double py, double cap = 0.99) {
    Eigen::Matrix2d cov;
    cov << pg.cov2d[0], pg.cov2d[1], pg.cov2d[1], pg.cov2d[2];
    const Eigen::Vector2d d(px - pg.mean_x, py - pg.mean_y);
    const double e = -0.5 * d.dot(cov.inverse() * d);
    return std::min(pg.opacity * std::exp(e), cap);
}

// Front-to-back compositing written as the closed-form sum with explicit products.
inline std::array<double, 3> composite(const std::vector<double>& alpha, const std::vector<std::array<double, 3>>& rgb) {
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        double t = 1.0;
        for (std::size_t j = 0; j < i; ++j) t *= 1.0 - alpha[j];
        for (int c = 0; c < 3; ++c) out[c] += t * alpha[i] * rgb[i][c];
    }
    return out;
}

// Tiles whose pixel rectangle [16 tx, 16 tx + 16) meets [mean - r, mean + r], by scanning every tile.
inline std::vector<splatsim::TileCoord> tiles_bruteforce(const splatsim::ProjectedGaussian& pg,
                                                         const splatsim::TileGeometry& geo) {
    std::vector<splatsim::TileCoord> out;
    const double r = pg.radius();
    for (std::uint32_t ty = 0; ty < geo.tiles_y; ++ty)
        for (std::uint32_t tx = 0; tx < geo.tiles_x; ++tx) {
            const double x0 = 16.0 * tx, x1 = x0 + 16.0, y0 = 16.0 * ty, y1 = y0 + 16.0;
            const bool overlap_x = pg.mean_x + r >= x0 && pg.mean_x - r < x1;
            const bool overlap_y = pg.mean_y + r >= y0 && pg.mean_y - r < y1;
            if (overlap_x && overlap_y) out.push_back({tx, ty});
        }
    return out;
}

// A projected Gaussian with a random positive-definite covariance.
inline splatsim::ProjectedGaussian random_projected(std::mt19937_64& rng, double mean_lo, double mean_hi,
                                                    double sigma_lo = 0.5, double sigma_hi = 6.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    const double s1 = uni(sigma_lo, sigma_hi), s2 = uni(sigma_lo, sigma_hi), th = uni(0.0, M_PI);
    const double c = std::cos(th), s = std::sin(th);
    const double vxx = c * c * s1 * s1 + s * s * s2 * s2;
    const double vyy = s * s * s1 * s1 + c * c * s2 * s2;
    const double vxy = c * s * (s1 * s1 - s2 * s2);
    const double det = vxx * vyy - vxy * vxy;
    splatsim::ProjectedGaussian pg;
    pg.id = std::uint32_t(rng() % 1000);
    pg.mean_x = uni(mean_lo, mean_hi);
    pg.mean_y = uni(mean_lo, mean_hi);
    pg.cov2d = {vxx, vxy, vyy};
    pg.neg_half_a = -0.5 * vyy / det;
    pg.neg_half_b = -0.5 * vxx / det;
    pg.c = vxy / det;
    pg.opacity = uni(0.05, 0.95);
    pg.rgb = {u(rng), u(rng), u(rng)};
    pg.depth = uni(1.0, 10.0);
    return pg;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

} // namespace oracle
