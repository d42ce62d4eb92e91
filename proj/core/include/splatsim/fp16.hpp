#pragma once

// IEEE 754 binary16 emulation (round-to-nearest-even only) and the activation
// primitives of the FP16 processing element.

#include <cstdint>
#include <string_view>

namespace splatsim {

enum class Fp16Class : std::uint8_t { zero, subnormal, normal, infinity, nan };

struct Fp16 {
    std::uint16_t bits = 0;

    static constexpr Fp16 from_bits(std::uint16_t b) { return Fp16{b}; }

    [[nodiscard]] constexpr bool sign() const { return (bits & 0x8000u) != 0; }
    [[nodiscard]] constexpr unsigned exponent_field() const { return (bits >> 10) & 0x1Fu; }
    [[nodiscard]] constexpr unsigned mantissa_field() const { return bits & 0x3FFu; }
    [[nodiscard]] Fp16Class classify() const;
    [[nodiscard]] bool is_nan() const { return classify() == Fp16Class::nan; }
    [[nodiscard]] double to_double() const;

    friend constexpr bool operator==(Fp16, Fp16) = default;
};

// Nearest-even rounding of a double. Overflow goes to +-inf, underflow to
// signed subnormals or zero.
[[nodiscard]] Fp16 round_to_fp16(double x);

// Exact result rounded once. Both are exact in double before the final rounding,
// so a single rounding step is correct.
[[nodiscard]] Fp16 fp16_add(Fp16 a, Fp16 b);
[[nodiscard]] Fp16 fp16_mul(Fp16 a, Fp16 b);
[[nodiscard]] Fp16 fp16_exp(Fp16 a);

struct LeakyReluHwResult {
    Fp16 value;
    // Set when the exponent field was 1..3, where subtracting 3 underflows and the
    // unit falls back to the exactly rounded x/8.
    bool underflow_fallback = false;
};

// Hardware Leaky ReLU: negative normals get 3 subtracted from the exponent field
// (a division by 8); everything else passes through.
[[nodiscard]] LeakyReluHwResult leaky_relu_hw_detail(Fp16 x);
[[nodiscard]] inline Fp16 leaky_relu_hw(Fp16 x) { return leaky_relu_hw_detail(x).value; }

[[nodiscard]] constexpr double leaky_relu_exact(double x) { return x >= 0.0 ? x : x / 8.0; }

// Arithmetic mode used by every downstream datapath.
enum class Arith : std::uint8_t { exact, fp16 };

[[nodiscard]] std::string_view to_string(Arith mode);
[[nodiscard]] Arith parse_arith(std::string_view name);

// Scalar ALU that applies the selected rounding after every operation.
class Alu {
public:
    constexpr explicit Alu(Arith mode = Arith::exact) : mode_(mode) {}

    [[nodiscard]] constexpr Arith mode() const { return mode_; }

    [[nodiscard]] double in(double x) const { return mode_ == Arith::fp16 ? round_to_fp16(x).to_double() : x; }
    [[nodiscard]] double add(double a, double b) const { return in(a + b); }
    [[nodiscard]] double sub(double a, double b) const { return in(a - b); }
    [[nodiscard]] double mul(double a, double b) const { return in(a * b); }
    [[nodiscard]] double div(double a, double b) const { return in(a / b); }
    [[nodiscard]] double exp(double a) const;
    [[nodiscard]] double leaky_relu(double a) const;

private:
    Arith mode_;
};

} // namespace splatsim
