#include "qdra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qdra {

double lyapunov(const Eigen::VectorXd& z_hat,
                const std::vector<Eigen::VectorXd>& lambda_hat,
                const Eigen::VectorXd& z_star,
                const std::vector<Eigen::VectorXd>& lambda_star, double rho) {
    if (rho <= 0.0) throw std::invalid_argument("lyapunov: rho must be positive");
    if (lambda_hat.size() != lambda_star.size() || z_hat.size() != z_star.size())
        throw DimensionMismatch("lyapunov: dimensions");
    double dual_term = 0.0;
    for (std::size_t i = 0; i < lambda_hat.size(); ++i) {
        if (lambda_hat[i].size() != lambda_star[i].size())
            throw DimensionMismatch("lyapunov: lambda dimensions");
        dual_term += (lambda_hat[i] - lambda_star[i]).squaredNorm();
    }
    const auto n = static_cast<double>(lambda_hat.size());
    return dual_term / rho + rho * n * (z_hat - z_star).squaredNorm();
}

ContractionEstimate contraction_estimate(const std::vector<double>& series,
                                         double floor_value) {
    if (series.size() < 10)
        throw InsufficientData("contraction_estimate: need at least 10 points");
    std::size_t end = 0;
    while (end < series.size() && series[end] > 10.0 * floor_value &&
           series[end] > floor_value)
        ++end;
    if (end < 2)
        throw InsufficientData("contraction_estimate: no pre-plateau segment");

    // Least squares of log(L_k - floor) against k over [0, end).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < end; ++k) {
        const double x = static_cast<double>(k);
        const double y = std::log(series[k] - floor_value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const auto n = static_cast<double>(end);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {std::exp(slope), 0, static_cast<int>(end)};
}

double plateau_floor(const std::vector<double>& series) {
    if (series.empty()) throw InsufficientData("plateau_floor: empty series");
    const std::size_t tail = std::max<std::size_t>(1, series.size() / 10);
    std::vector<double> last(series.end() - static_cast<std::ptrdiff_t>(tail),
                             series.end());
    std::sort(last.begin(), last.end());
    return last[last.size() / 2];
}

BoundChecks bound_check_iteration(const IterationSnapshot& snapshot, double rho,
                                  const std::optional<QuantizationLevel>& level) {
    const auto& nodes = *snapshot.nodes_after;
    const auto n_nodes = nodes.size();
    const double delta = level ? level->value() : 0.0;
    BoundChecks checks;

    // Consensus-output bounds: against the exact mean of y, against the
    // quantized-input average (exact in integers), and the dual variables
    // against their unquantized counterparts.
    const double gap_tol = level ? 2.0 * delta : 1e-9;
    const double dual_gap_tol = level ? 2.0 * rho * delta : 1e-9 * rho;
    bool consensus_bounds = true;
    IntVec lattice_sum;
    if (level) {
        lattice_sum.assign(static_cast<std::size_t>(snapshot.y_bar.size()), 0);
        for (const Eigen::VectorXd& yi : *snapshot.y) {
            const IntVec q = quantize(yi, *level);
            for (std::size_t c = 0; c < q.size(); ++c) lattice_sum[c] += q[c];
        }
    }
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const Eigen::VectorXd& z_i = nodes[i].z_hat;
        if ((z_i - snapshot.y_bar).lpNorm<Eigen::Infinity>() > gap_tol) consensus_bounds = false;
        const Eigen::VectorXd ideal_lambda =
            rho * (nodes[i].x - snapshot.y_bar) - nodes[i].g;
        if ((nodes[i].lambda_hat - ideal_lambda).lpNorm<Eigen::Infinity>() > dual_gap_tol)
            consensus_bounds = false;
        if (level) {
            // |N m_i - sum_j q_j| <= N per component, checked exactly.
            const IntVec& m = (*snapshot.lattice)[i];
            const auto n64 = static_cast<std::int64_t>(n_nodes);
            for (std::size_t c = 0; c < m.size(); ++c) {
                const std::int64_t dev = n64 * m[c] - lattice_sum[c];
                if (dev < -n64 || dev > n64) consensus_bounds = false;
            }
        }
    }
    checks.consensus_bounds_ok = consensus_bounds;

    // Quantized dual-sum bound.
    Eigen::VectorXd lambda_sum = Eigen::VectorXd::Zero(snapshot.y_bar.size());
    for (const NodeState& node : nodes) lambda_sum += node.lambda_hat;
    const double dual_sum_tol =
        level ? 2.0 * rho * static_cast<double>(n_nodes) * delta
              : 1e-9 * rho * static_cast<double>(n_nodes);
    checks.dual_sum_ok = lambda_sum.lpNorm<Eigen::Infinity>() <= dual_sum_tol;

    // Primal/dual/consensus identity, exact algebra up to round-off.
    double residual = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const Eigen::VectorXd reconstructed =
            (nodes[i].lambda_hat - snapshot.lambda_hat_before[i]) / (2.0 * rho) +
            (nodes[i].z_hat + snapshot.z_hat_before[i]) / 2.0;
        const double r = (nodes[i].x - reconstructed).lpNorm<Eigen::Infinity>() /
                         (1.0 + nodes[i].x.lpNorm<Eigen::Infinity>());
        residual = std::max(residual, r);
    }
    checks.identity_residual = residual;
    checks.identity_ok = residual <= 1e-9;

    Eigen::VectorXd z_mean = Eigen::VectorXd::Zero(snapshot.y_bar.size());
    for (const NodeState& node : nodes) z_mean += node.z_hat;
    z_mean /= static_cast<double>(n_nodes);
    for (const NodeState& node : nodes)
        checks.zhat_spread = std::max(
            checks.zhat_spread, (node.z_hat - z_mean).lpNorm<Eigen::Infinity>());
    return checks;
}

void RunRecord::append(const RunRow& row) {
    if (!rows_.empty() && row.k <= rows_.back().k)
        throw std::invalid_argument("RunRecord: iterations must strictly increase");
    rows_.push_back(row);
}

std::string RunRecord::to_csv() const {
    std::ostringstream os;
    for (const auto& [key, value] : metadata_) os << "# " << key << " = " << value << '\n';
    os << "iteration,solution_error,lyapunov,fqac_rounds,messages,bits_quantized,"
          "bits_float_equivalent,consensus_bounds_ok,dual_sum_ok,identity_residual,zhat_spread\n";
    for (const RunRow& r : rows_) {
        os << r.k << ',' << format_double(r.solution_error) << ','
           << format_double(r.lyapunov) << ',' << r.fqac_rounds << ',' << r.messages
           << ',' << r.bits_quantized << ',' << r.bits_float_equivalent << ','
           << (r.consensus_bounds_ok ? 1 : 0) << ',' << (r.dual_sum_ok ? 1 : 0) << ','
           << format_double(r.identity_residual) << ',' << format_double(r.zhat_spread)
           << '\n';
    }
    return os.str();
}

void RunRecord::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_csv();
}

}  // namespace qdra
