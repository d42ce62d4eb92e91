#include "splatsim/fp16.hpp"

#include "splatsim/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace splatsim {

Fp16Class Fp16::classify() const {
    const unsigned e = exponent_field();
    const unsigned m = mantissa_field();
    if (e == 0) return m == 0 ? Fp16Class::zero : Fp16Class::subnormal;
    if (e == 0x1F) return m == 0 ? Fp16Class::infinity : Fp16Class::nan;
    return Fp16Class::normal;
}

double Fp16::to_double() const {
    const unsigned e = exponent_field();
    const unsigned m = mantissa_field();
    double magnitude = 0.0;
    if (e == 0) {
        magnitude = std::ldexp(static_cast<double>(m), -24);
    } else if (e == 0x1F) {
        magnitude = m == 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    } else {
        magnitude = std::ldexp(static_cast<double>(m | 0x400u), static_cast<int>(e) - 25);
    }
    return sign() ? -magnitude : magnitude;
}

namespace {

// std::nearbyint honours the current rounding mode; the default is nearest-even,
// which is the only mode we support.
double round_half_even(double v) {
    return std::nearbyint(v);
}

} // namespace

Fp16 round_to_fp16(double x) {
    const std::uint16_t sign = std::signbit(x) ? 0x8000u : 0u;
    if (std::isnan(x)) return Fp16{static_cast<std::uint16_t>(sign | 0x7E00u)};
    const double a = std::fabs(x);
    if (std::isinf(a)) return Fp16{static_cast<std::uint16_t>(sign | 0x7C00u)};

    // Below the smallest normal (2^-14): count of 2^-24 units, rounded. A result of
    // 1024 is the smallest normal and encodes correctly as-is.
    if (a < 0x1p-14) {
        const auto units = static_cast<std::uint16_t>(round_half_even(std::ldexp(a, 24)));
        return Fp16{static_cast<std::uint16_t>(sign | units)};
    }

    int exp2 = 0;
    const double frac = std::frexp(a, &exp2);  // a = frac * 2^exp2, frac in [0.5, 1)
    int e = exp2 - 1;                           // a = (2 frac) * 2^e
    double significand = round_half_even(std::ldexp(frac, 11));  // in [1024, 2048]
    if (significand == 2048.0) {
        significand = 1024.0;
        ++e;
    }
    if (e > 15) return Fp16{static_cast<std::uint16_t>(sign | 0x7C00u)};
    const auto field = static_cast<std::uint16_t>((e + 15) << 10);
    const auto mantissa = static_cast<std::uint16_t>(static_cast<unsigned>(significand) - 1024u);
    return Fp16{static_cast<std::uint16_t>(sign | field | mantissa)};
}

Fp16 fp16_add(Fp16 a, Fp16 b) {
    return round_to_fp16(a.to_double() + b.to_double());
}

Fp16 fp16_mul(Fp16 a, Fp16 b) {
    return round_to_fp16(a.to_double() * b.to_double());
}

Fp16 fp16_exp(Fp16 a) {
    return round_to_fp16(std::exp(a.to_double()));
}

LeakyReluHwResult leaky_relu_hw_detail(Fp16 x) {
    if (!x.sign() || x.classify() != Fp16Class::normal) return {x, false};
    const unsigned e = x.exponent_field();
    if (e >= 4) {
        const auto bits = static_cast<std::uint16_t>((x.bits & ~0x7C00u) | ((e - 3u) << 10));
        return {Fp16{bits}, false};
    }
    return {round_to_fp16(x.to_double() / 8.0), true};
}

std::string_view to_string(Arith mode) {
    return mode == Arith::fp16 ? "fp16" : "exact";
}

Arith parse_arith(std::string_view name) {
    if (name == "exact") return Arith::exact;
    if (name == "fp16") return Arith::fp16;
    throw ConfigError("unknown arithmetic mode '" + std::string(name) + "' (expected exact|fp16)");
}

double Alu::exp(double a) const {
    return mode_ == Arith::fp16 ? fp16_exp(round_to_fp16(a)).to_double() : std::exp(a);
}

double Alu::leaky_relu(double a) const {
    return mode_ == Arith::fp16 ? leaky_relu_hw(round_to_fp16(a)).to_double() : leaky_relu_exact(a);
}

} // namespace splatsim
