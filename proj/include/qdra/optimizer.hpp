#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qdra/fqac.hpp"
#include "qdra/graph.hpp"
#include "qdra/netsim.hpp"
#include "qdra/quantizer.hpp"

namespace qdra {

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Local-cost behavioral contract. local_argmin must return the minimizer of
///   f(x) + lambda_hat' x + (rho/2) ||x - z_hat||^2;
/// whatever it returns is validated against first-order stationarity.
class CostOracle {
public:
    virtual ~CostOracle() = default;
    virtual Eigen::Index dimension() const = 0;
    virtual Eigen::VectorXd local_argmin(const Eigen::VectorXd& lambda_hat,
                                         const Eigen::VectorXd& z_hat,
                                         double rho) const = 0;
    virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
};

/// f(x) = x'Px/2 + p'x with symmetric positive semidefinite P. The penalized
/// subproblem is solved exactly via an LDLT of (P + rho*I), cached while rho
/// stays constant. The cache makes instances non-thread-safe; give each
/// concurrent run its own copy.
class QuadraticCost final : public CostOracle {
public:
    QuadraticCost(Eigen::MatrixXd P, Eigen::VectorXd p);

    Eigen::Index dimension() const override { return p_.size(); }
    Eigen::VectorXd local_argmin(const Eigen::VectorXd& lambda_hat,
                                 const Eigen::VectorXd& z_hat,
                                 double rho) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;

    const Eigen::MatrixXd& P() const { return P_; }
    const Eigen::VectorXd& p() const { return p_; }
    /// Smallest eigenvalue of P: the strong-convexity constant.
    double mu() const { return mu_; }
    /// Largest eigenvalue of P: the gradient Lipschitz constant.
    double lipschitz() const { return lipschitz_; }
    bool strongly_convex() const;

    double value(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(P_ * x) + p_.dot(x);
    }

private:
    Eigen::MatrixXd P_;
    Eigen::VectorXd p_;
    double mu_ = 0.0;
    double lipschitz_ = 0.0;
    mutable double cached_rho_ = -1.0;
    mutable Eigen::LDLT<Eigen::MatrixXd> cached_solver_;
};

/// Per-node optimization state.
struct NodeState {
    Eigen::VectorXd x;
    Eigen::VectorXd z_hat;
    Eigen::VectorXd lambda_hat;
    Eigen::VectorXd g;
    std::shared_ptr<const CostOracle> cost;
};

/// argmin_x f(x) + lambda_hat' x + (rho/2)||x - z_hat||^2, with stationarity
/// of the returned point validated (OracleFailure otherwise).
Eigen::VectorXd local_primal_update(const CostOracle& cost,
                                    const Eigen::VectorXd& lambda_hat,
                                    const Eigen::VectorXd& z_hat, double rho);

/// g = rho (z_hat - x_plus) - lambda_hat; equals grad f(x_plus) whenever the
/// subproblem was solved exactly.
Eigen::VectorXd gradient_eval(double rho, const Eigen::VectorXd& z_hat,
                              const Eigen::VectorXd& x_plus,
                              const Eigen::VectorXd& lambda_hat);

/// lambda_plus = rho (x_plus - z_hat_plus) - g.
Eigen::VectorXd dual_update(double rho, const Eigen::VectorXd& x_plus,
                            const Eigen::VectorXd& z_hat_plus,
                            const Eigen::VectorXd& g);

enum class Coordinator { Fqac, ExactAverage };

/// What one decentralized iteration leaves behind for metrics: the exact mean
/// of the coordination inputs, the inputs themselves, the protocol outputs in
/// lattice units (empty for the exact-average coordinator), and the traffic.
struct StepReport {
    Eigen::VectorXd y_bar;
    std::vector<Eigen::VectorXd> y;
    std::vector<IntVec> lattice;
    int fqac_rounds = 0;
    CommStats stats;
};

/// One full decentralized iteration across all nodes: local primal update,
/// gradient evaluation, coordination on y_i = x_i+ - g_i/rho (finite-time
/// quantized consensus, or the exact average when level is empty), then the
/// dual update. States are modified in place.
StepReport qudrc_aladin_step(std::vector<NodeState>& nodes,
                             const DirectedGraph& graph, double rho,
                             const std::optional<QuantizationLevel>& level,
                             NodeRngPool& rng,
                             WidthPolicy policy = WidthPolicy::fixed(32),
                             long max_fqac_rounds = 0,
                             const FqacObserver& observer = {});

/// Centralized baseline: local update, gradient, exact averaging of
/// x_i+ - g_i/rho into one shared z+, dual update. Requires all nodes to
/// share a common z beforehand. Independent of the decentralized path.
void rc_aladin_step(std::vector<NodeState>& nodes, double rho);

/// Exact optimum of the consensus problem for quadratic costs:
/// z* = (sum P_i)^-1 (-sum p_i), lambda_i* = -(P_i z* + p_i).
struct CentralizedOptimum {
    Eigen::VectorXd z_star;
    std::vector<Eigen::VectorXd> lambda_star;
};
CentralizedOptimum centralized_optimum(
    const std::vector<std::shared_ptr<const QuadraticCost>>& costs);

/// Text form of a quadratic cost: dimension on the first line, the rows of P
/// next, then p on the last line. Values round-trip exactly.
std::string cost_to_text(const QuadraticCost& cost);
QuadraticCost cost_from_text(const std::string& text);

}  // namespace qdra
