#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdra/optimizer.hpp"
#include "qdra/quantizer.hpp"
#include "qdra/text.hpp"

namespace qdra {

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// (1/rho) sum_i ||lambda_hat_i - lambda_i*||^2 + rho N ||z_hat - z*||^2.
/// The caller passes one representative z_hat (the mean of the per-node
/// estimates, which agree to within the quantization error).
double lyapunov(const Eigen::VectorXd& z_hat,
                const std::vector<Eigen::VectorXd>& lambda_hat,
                const Eigen::VectorXd& z_star,
                const std::vector<Eigen::VectorXd>& lambda_star, double rho);

struct ContractionEstimate {
    double factor = 0.0;  // implied per-iteration multiplier, exp(slope)
    int first = 0;        // iteration range used (inclusive / exclusive)
    int last = 0;
};

/// Least-squares slope of log(L_k - floor) over the pre-plateau prefix
/// (indices with L_k > 10 * floor). Throws InsufficientData when the series
/// is shorter than 10 or no such prefix of at least two points exists.
ContractionEstimate contraction_estimate(const std::vector<double>& series,
                                         double floor_value);

/// Median of the last 10% of the series: the plateau floor heuristic.
double plateau_floor(const std::vector<double>& series);

struct BoundChecks {
    bool consensus_bounds_ok = false;      // consensus outputs near the exact average
    bool dual_sum_ok = false;        // quantized dual-sum bound
    double identity_residual = 0;  // primal/dual/consensus identity residual
    bool identity_ok = false;
    double zhat_spread = 0;      // max_i ||z_hat_i - mean||_inf
};

/// Everything one iteration leaves behind that the checks need: states before
/// and after, the coordination inputs y_i with their exact mean, and the
/// protocol outputs in lattice units (empty for exact-average runs).
struct IterationSnapshot {
    std::vector<Eigen::VectorXd> z_hat_before;
    std::vector<Eigen::VectorXd> lambda_hat_before;
    const std::vector<NodeState>* nodes_after = nullptr;
    Eigen::VectorXd y_bar;
    const std::vector<Eigen::VectorXd>* y = nullptr;
    const std::vector<IntVec>* lattice = nullptr;
};

/// Evaluates the per-iteration identities:
///  - each z_hat_i+ within Delta (exact integers) of the quantized-input
///    average and within 2*Delta of y_bar; each lambda_hat_i+ within
///    2*rho*Delta of the unquantized dual update;
///  - ||sum lambda_hat_i+||_inf <= 2*rho*N*Delta;
///  - x+ = (lambda+ - lambda)/(2 rho) + (z+ + z)/2 to round-off.
BoundChecks bound_check_iteration(const IterationSnapshot& snapshot, double rho,
                                  const std::optional<QuantizationLevel>& level);

struct RunRow {
    int k = 0;
    double solution_error = 0;
    double lyapunov = 0;
    int fqac_rounds = 0;
    std::uint64_t messages = 0;
    std::uint64_t bits_quantized = 0;
    std::uint64_t bits_float_equivalent = 0;
    bool consensus_bounds_ok = false;
    bool dual_sum_ok = false;
    double identity_residual = 0;
    double zhat_spread = 0;
};

/// Append-only per-iteration trace plus run metadata. Serialized as CSV with
/// `#`-prefixed metadata lines; formatting is deterministic so identical runs
/// produce identical bytes.
class RunRecord {
public:
    void set_meta(const std::string& key, const std::string& value) {
        metadata_[key] = value;
    }
    const std::string& meta(const std::string& key) const { return metadata_.at(key); }
    const std::map<std::string, std::string>& metadata() const { return metadata_; }

    void append(const RunRow& row);
    const std::vector<RunRow>& rows() const { return rows_; }

    std::string to_csv() const;
    void write_csv(const std::string& path) const;

private:
    std::map<std::string, std::string> metadata_;
    std::vector<RunRow> rows_;
};

}  // namespace qdra
