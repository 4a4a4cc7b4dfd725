#include "qdra/quantizer.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace qdra {
namespace {

using i128 = __int128;

constexpr i128 kI128Max = (((i128)1 << 126) - 1) * 2 + 1;  // 2^127 - 1

std::int64_t checked_i64(i128 v, const char* what) {
    if (v < std::numeric_limits<std::int64_t>::min() ||
        v > std::numeric_limits<std::int64_t>::max())
        throw std::overflow_error(what);
    return static_cast<std::int64_t>(v);
}

// Division rounding toward -inf; divisor must be positive.
i128 floor_div(i128 a, i128 b) {
    i128 q = a / b;
    if (a % b != 0 && a < 0) --q;
    return q;
}

}  // namespace

QuantizationLevel QuantizationLevel::ratio(std::int64_t num, std::int64_t den) {
    if (num <= 0 || den <= 0)
        throw std::invalid_argument("quantization level must be positive");
    const std::int64_t g = std::gcd(num, den);
    return QuantizationLevel(num / g, den / g);
}

QuantizationLevel QuantizationLevel::from_decimal(std::string_view text) {
    std::size_t pos = 0;
    auto peek = [&]() -> int { return pos < text.size() ? text[pos] : -1; };
    auto fail = [&]() -> void {
        throw std::invalid_argument("bad quantization level: '" + std::string(text) + "'");
    };

    bool negative = false;
    if (peek() == '+' || peek() == '-') negative = (text[pos++] == '-');

    i128 mantissa = 0;
    int digits = 0, frac_digits = 0;
    auto digit_run = [&](bool fractional) {
        while (std::isdigit(peek())) {
            mantissa = mantissa * 10 + (text[pos++] - '0');
            if (mantissa > kI128Max / 1000) fail();  // keep headroom for the loop
            ++digits;
            if (fractional) ++frac_digits;
        }
    };
    digit_run(false);
    if (peek() == '.') {
        ++pos;
        digit_run(true);
    }
    if (digits == 0) fail();

    long exponent = 0;
    if (peek() == 'e' || peek() == 'E') {
        ++pos;
        bool exp_neg = false;
        if (peek() == '+' || peek() == '-') exp_neg = (text[pos++] == '-');
        if (!std::isdigit(peek())) fail();
        while (std::isdigit(peek())) {
            exponent = exponent * 10 + (text[pos++] - '0');
            if (exponent > 10000) fail();
        }
        if (exp_neg) exponent = -exponent;
    }
    if (pos != text.size()) fail();
    if (negative || mantissa == 0)
        throw std::invalid_argument("quantization level must be positive");

    exponent -= frac_digits;
    i128 num = mantissa, den = 1;
    for (; exponent > 0; --exponent) {
        num *= 10;
        if (num > kI128Max / 10) fail();
    }
    for (; exponent < 0; ++exponent) {
        den *= 10;
        if (den > kI128Max / 10) fail();
    }
    // Reduce with Euclid in 128 bits, then demand an int64 result.
    i128 a = num, b = den;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    num /= a;
    den /= a;
    return QuantizationLevel(checked_i64(num, "quantization level numerator overflow"),
                             checked_i64(den, "quantization level denominator overflow"));
}

std::int64_t quantize(double b, const QuantizationLevel& level) {
    if (!std::isfinite(b)) throw NonFiniteInput("quantize: non-finite input");
    if (b == 0.0) return 0;

    // b = m * 2^e exactly, |m| in [2^52, 2^53).
    int exp = 0;
    const double fr = std::frexp(b, &exp);
    const auto m = static_cast<std::int64_t>(std::ldexp(fr, 53));
    const int e = exp - 53;

    const i128 scaled = (i128)m * level.den();  // |scaled| < 2^116
    if (e >= 0) {
        // floor(scaled * 2^e / num); any overflow here implies the result
        // cannot fit an int64 either.
        i128 numerator = scaled;
        for (int s = 0; s < e; ++s) {
            if (numerator > kI128Max / 2 || numerator < -(kI128Max / 2))
                throw std::overflow_error("quantize: lattice index out of range");
            numerator *= 2;
        }
        return checked_i64(floor_div(numerator, level.num()),
                           "quantize: lattice index out of range");
    }
    const int shift = -e;
    if (shift >= 127 || level.num() > (kI128Max >> shift)) {
        // Divisor exceeds |scaled|, so the ratio lies strictly inside (-1, 1).
        return m < 0 ? -1 : 0;
    }
    return checked_i64(floor_div(scaled, (i128)level.num() << shift),
                       "quantize: lattice index out of range");
}

IntVec quantize(const Eigen::VectorXd& b, const QuantizationLevel& level) {
    IntVec out(static_cast<std::size_t>(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i)
        out[static_cast<std::size_t>(i)] = quantize(b[i], level);
    return out;
}

double dequantize(std::int64_t k, const QuantizationLevel& level) {
    return static_cast<double>(k) * static_cast<double>(level.num()) /
           static_cast<double>(level.den());
}

Eigen::VectorXd dequantize(const IntVec& k, const QuantizationLevel& level) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(k.size()));
    for (std::size_t i = 0; i < k.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = dequantize(k[i], level);
    return out;
}

}  // namespace qdra
