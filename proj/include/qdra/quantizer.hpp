#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdra {

struct NonFiniteInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using IntVec = std::vector<std::int64_t>;

/// Quantization level Delta, held as an exact positive rational num/den.
/// Finite decimal strings ("0.25", "1e-4", "2.5e-3") always parse exactly;
/// everything downstream of quantize() is integer arithmetic, so floating
/// error is confined to dequantize().
class QuantizationLevel {
public:
    static QuantizationLevel from_decimal(std::string_view text);
    static QuantizationLevel ratio(std::int64_t num, std::int64_t den);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend bool operator==(const QuantizationLevel&, const QuantizationLevel&) = default;

private:
    QuantizationLevel(std::int64_t num, std::int64_t den) : num_(num), den_(den) {}
    std::int64_t num_;
    std::int64_t den_;
};

/// Asymmetric mid-rise quantizer: the exact floor(b / Delta), computed in
/// integer arithmetic from the binary decomposition of b. Throws
/// NonFiniteInput on NaN or infinity, std::overflow_error if the lattice
/// index exceeds the int64 range.
std::int64_t quantize(double b, const QuantizationLevel& level);
IntVec quantize(const Eigen::VectorXd& b, const QuantizationLevel& level);

/// k * Delta, rounded to nearest double per component.
double dequantize(std::int64_t k, const QuantizationLevel& level);
Eigen::VectorXd dequantize(const IntVec& k, const QuantizationLevel& level);

}  // namespace qdra
