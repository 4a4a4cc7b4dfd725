#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qdra/quantizer.hpp"

using qdra::dequantize;
using qdra::IntVec;
using qdra::NonFiniteInput;
using qdra::quantize;
using qdra::QuantizationLevel;

namespace {

using i128 = __int128;

// Exact sign of k * num/den - b, independent of the library's division-based
// path: decomposes b into mantissa * 2^exponent and compares products.
int compare_lattice_point(std::int64_t k, const QuantizationLevel& lvl, double b) {
    REQUIRE(std::isfinite(b));
    if (b == 0.0) return k == 0 ? 0 : (k > 0 ? 1 : -1);
    int exp = 0;
    const double fr = std::frexp(b, &exp);
    const auto mant = static_cast<std::int64_t>(std::ldexp(fr, 53));
    const int e = exp - 53;

    i128 lhs = (i128)k * lvl.num();        // |.| <= 2^126
    i128 rhs = (i128)mant * lvl.den();     // |.| < 2^116
    // Align the binary exponents: lhs * 2^0 vs rhs * 2^e.
    int shift = e;
    i128* grow = &rhs;
    if (shift < 0) {
        shift = -shift;
        grow = &lhs;
    }
    constexpr i128 kLimit = ((((i128)1 << 126) - 1) * 2 + 1) / 2;
    for (; shift > 0; --shift) {
        if (*grow > kLimit || *grow < -kLimit) {
            // Magnitude overwhelms the other side; sign decides.
            return grow == &rhs ? (rhs > 0 ? -1 : 1) : (lhs > 0 ? 1 : -1);
        }
        *grow *= 2;
    }
    return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

bool sandwich_holds(double b, const QuantizationLevel& lvl) {
    const std::int64_t q = quantize(b, lvl);
    return compare_lattice_point(q, lvl, b) <= 0 &&
           compare_lattice_point(q + 1, lvl, b) > 0;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("decimal parsing produces exact rationals") {
    CHECK(QuantizationLevel::from_decimal("0.25") == QuantizationLevel::ratio(1, 4));
    CHECK(QuantizationLevel::from_decimal("1e-4") == QuantizationLevel::ratio(1, 10000));
    CHECK(QuantizationLevel::from_decimal("2.5e-3") == QuantizationLevel::ratio(1, 400));
    CHECK(QuantizationLevel::from_decimal("0.1") == QuantizationLevel::ratio(1, 10));
    CHECK(QuantizationLevel::from_decimal("10") == QuantizationLevel::ratio(10, 1));
    CHECK(QuantizationLevel::from_decimal("1E2") == QuantizationLevel::ratio(100, 1));
    CHECK(QuantizationLevel::from_decimal(".5") == QuantizationLevel::ratio(1, 2));

    CHECK_THROWS_AS(QuantizationLevel::from_decimal("0"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal("-1e-3"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal("abc"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal("1e"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal(""), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal("1.2.3"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::from_decimal("1e-40"), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::ratio(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(QuantizationLevel::ratio(-1, 2), std::invalid_argument);
}

TEST_CASE("quantize matches floor arithmetic") {
    const auto half = QuantizationLevel::from_decimal("0.5");
    CHECK(quantize(vec({1.2, 0.0}), half) == IntVec{2, 0});
    CHECK(quantize(-1.2, half) == -3);
    CHECK(quantize(vec({-1.2}), half) == IntVec{-3});

    // Lattice points are fixed for binary-exact levels.
    const auto quarter = QuantizationLevel::ratio(1, 4);
    for (std::int64_t k : {-7, -1, 0, 1, 3, 1000000}) {
        CHECK(quantize(static_cast<double>(k) * 0.25, quarter) == k);
    }

    CHECK_THROWS_AS(quantize(std::nan(""), half), NonFiniteInput);
    CHECK_THROWS_AS(quantize(INFINITY, half), NonFiniteInput);
    CHECK_THROWS_AS(quantize(1e300, QuantizationLevel::from_decimal("1e-6")),
                    std::overflow_error);
}

TEST_CASE("dequantize scales by the level") {
    const auto quarter = QuantizationLevel::ratio(1, 4);
    CHECK(dequantize(4, quarter) == 1.0);
    CHECK(dequantize(IntVec{0, 0, 0}, quarter) == Eigen::VectorXd::Zero(3));
    CHECK(dequantize(-3, QuantizationLevel::from_decimal("0.5")) == -1.5);
}

TEST_CASE("round trip error stays below one level") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> wide(-100.0, 100.0);
    for (const char* text : {"0.5", "1e-2", "1e-4", "2.5e-3"}) {
        const auto lvl = QuantizationLevel::from_decimal(text);
        for (int trial = 0; trial < 1000; ++trial) {
            const double b = wide(rng);
            const double back = dequantize(quantize(b, lvl), lvl);
            CHECK(std::abs(back - b) <= lvl.value());
        }
    }
}

TEST_CASE("sandwich property holds exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> wide(-1000.0, 1000.0);
    for (const char* text : {"0.25", "1e-2", "1e-4", "3", "0.1"}) {
        const auto lvl = QuantizationLevel::from_decimal(text);
        for (int trial = 0; trial < 2000; ++trial) {
            CHECK(sandwich_holds(wide(rng), lvl));
        }
        CHECK(sandwich_holds(0.0, lvl));
        CHECK(sandwich_holds(5e-324, lvl));   // smallest denormal
        CHECK(sandwich_holds(-5e-324, lvl));
    }
}

TEST_CASE("quantize is monotone") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> wide(-50.0, 50.0);
    const auto lvl = QuantizationLevel::from_decimal("1e-3");
    for (int trial = 0; trial < 2000; ++trial) {
        double a = wide(rng), b = wide(rng);
        if (a > b) std::swap(a, b);
        CHECK(quantize(a, lvl) <= quantize(b, lvl));
    }
}

TEST_CASE("shifting by exact level multiples shifts the index") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> grid(-50000, 50000);
    std::uniform_int_distribution<int> steps(-1000, 1000);
    const auto quarter = QuantizationLevel::ratio(1, 4);
    for (int trial = 0; trial < 2000; ++trial) {
        // b on the 2^-10 grid keeps b + m/4 exactly representable.
        const double b = static_cast<double>(grid(rng)) / 1024.0;
        const int m = steps(rng);
        CHECK(quantize(b + m * 0.25, quarter) == quantize(b, quarter) + m);
    }
}
