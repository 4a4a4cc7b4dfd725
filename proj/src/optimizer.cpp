#include "qdra/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "qdra/text.hpp"

namespace qdra {
namespace {

void require_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const char* what) {
    if (a.size() != b.size()) throw DimensionMismatch(what);
}

}  // namespace

QuadraticCost::QuadraticCost(Eigen::MatrixXd P, Eigen::VectorXd p)
    : P_(std::move(P)), p_(std::move(p)) {
    if (P_.rows() != P_.cols() || P_.rows() != p_.size())
        throw DimensionMismatch("QuadraticCost: P must be square and match p");
    const double scale = P_.cwiseAbs().maxCoeff();
    if ((P_ - P_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
        throw std::invalid_argument("QuadraticCost: P is not symmetric");
    P_ = ((P_ + P_.transpose()) / 2.0).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(P_, Eigen::EigenvaluesOnly);
    mu_ = eigs.eigenvalues().minCoeff();
    lipschitz_ = eigs.eigenvalues().maxCoeff();
    if (mu_ < -1e-8 * std::max(1.0, lipschitz_))
        throw std::invalid_argument("QuadraticCost: P is indefinite");
}

bool QuadraticCost::strongly_convex() const {
    return mu_ > 1e-10 * std::max(1.0, lipschitz_);
}

Eigen::VectorXd QuadraticCost::local_argmin(const Eigen::VectorXd& lambda_hat,
                                            const Eigen::VectorXd& z_hat,
                                            double rho) const {
    if (rho <= 0.0) throw std::invalid_argument("local_argmin: rho must be positive");
    require_same_size(lambda_hat, p_, "local_argmin: lambda dimension");
    require_same_size(z_hat, p_, "local_argmin: z dimension");
    if (cached_rho_ != rho) {
        cached_solver_.compute(P_ + rho * Eigen::MatrixXd::Identity(P_.rows(), P_.cols()));
        if (cached_solver_.info() != Eigen::Success || !cached_solver_.isPositive())
            throw SingularSystem("local_argmin: P + rho*I not positive definite");
        cached_rho_ = rho;
    }
    return cached_solver_.solve(rho * z_hat - lambda_hat - p_);
}

Eigen::VectorXd QuadraticCost::gradient(const Eigen::VectorXd& x) const {
    require_same_size(x, p_, "gradient: dimension");
    return P_ * x + p_;
}

Eigen::VectorXd local_primal_update(const CostOracle& cost,
                                    const Eigen::VectorXd& lambda_hat,
                                    const Eigen::VectorXd& z_hat, double rho) {
    if (rho <= 0.0)
        throw std::invalid_argument("local_primal_update: rho must be positive");
    Eigen::VectorXd x_plus = cost.local_argmin(lambda_hat, z_hat, rho);
    const Eigen::VectorXd grad = cost.gradient(x_plus);
    const Eigen::VectorXd residual = grad + lambda_hat + rho * (x_plus - z_hat);
    const double scale =
        1.0 + grad.norm() + lambda_hat.norm() + rho * (x_plus - z_hat).norm();
    if (residual.norm() > 1e-6 * scale)
        throw OracleFailure("local_primal_update: oracle returned a non-stationary point");
    return x_plus;
}

Eigen::VectorXd gradient_eval(double rho, const Eigen::VectorXd& z_hat,
                              const Eigen::VectorXd& x_plus,
                              const Eigen::VectorXd& lambda_hat) {
    require_same_size(z_hat, x_plus, "gradient_eval: dimensions");
    require_same_size(z_hat, lambda_hat, "gradient_eval: dimensions");
    return rho * (z_hat - x_plus) - lambda_hat;
}

Eigen::VectorXd dual_update(double rho, const Eigen::VectorXd& x_plus,
                            const Eigen::VectorXd& z_hat_plus,
                            const Eigen::VectorXd& g) {
    require_same_size(x_plus, z_hat_plus, "dual_update: dimensions");
    require_same_size(x_plus, g, "dual_update: dimensions");
    return rho * (x_plus - z_hat_plus) - g;
}

StepReport qudrc_aladin_step(std::vector<NodeState>& nodes,
                             const DirectedGraph& graph, double rho,
                             const std::optional<QuantizationLevel>& level,
                             NodeRngPool& rng, WidthPolicy policy,
                             long max_fqac_rounds, const FqacObserver& observer) {
    const auto n_nodes = nodes.size();
    if (n_nodes != static_cast<std::size_t>(graph.node_count()))
        throw DimensionMismatch("qudrc_aladin_step: one state per graph node required");

    StepReport report;
    report.y.reserve(n_nodes);
    for (NodeState& node : nodes) {
        node.x = local_primal_update(*node.cost, node.lambda_hat, node.z_hat, rho);
        node.g = gradient_eval(rho, node.z_hat, node.x, node.lambda_hat);
        report.y.push_back(node.x - node.g / rho);
    }

    report.y_bar = Eigen::VectorXd::Zero(report.y.front().size());
    for (const Eigen::VectorXd& yi : report.y) report.y_bar += yi;
    report.y_bar /= static_cast<double>(n_nodes);

    if (level) {
        FqacResult consensus = fqac_run(report.y, graph, *level, rng, policy,
                                        max_fqac_rounds, observer);
        for (std::size_t i = 0; i < n_nodes; ++i)
            nodes[i].z_hat = std::move(consensus.z_hat[i]);
        report.lattice = std::move(consensus.lattice);
        report.fqac_rounds = consensus.rounds;
        report.stats = consensus.stats;
    } else {
        for (NodeState& node : nodes) node.z_hat = report.y_bar;
    }

    for (NodeState& node : nodes)
        node.lambda_hat = dual_update(rho, node.x, node.z_hat, node.g);
    return report;
}

void rc_aladin_step(std::vector<NodeState>& nodes, double rho) {
    if (nodes.empty()) throw DimensionMismatch("rc_aladin_step: no nodes");
    const Eigen::VectorXd z = nodes.front().z_hat;
    for (const NodeState& node : nodes) {
        require_same_size(node.z_hat, z, "rc_aladin_step: z dimensions");
        if ((node.z_hat - z).lpNorm<Eigen::Infinity>() != 0.0)
            throw std::invalid_argument("rc_aladin_step: nodes must share a common z");
    }

    for (NodeState& node : nodes) {
        node.x = local_primal_update(*node.cost, node.lambda_hat, z, rho);
        node.g = rho * (z - node.x) - node.lambda_hat;
    }
    Eigen::VectorXd z_plus = Eigen::VectorXd::Zero(z.size());
    for (const NodeState& node : nodes) z_plus += node.x - node.g / rho;
    z_plus /= static_cast<double>(nodes.size());
    for (NodeState& node : nodes) {
        node.z_hat = z_plus;
        node.lambda_hat = rho * (node.x - z_plus) - node.g;
    }
}

CentralizedOptimum centralized_optimum(
    const std::vector<std::shared_ptr<const QuadraticCost>>& costs) {
    if (costs.empty()) throw DimensionMismatch("centralized_optimum: no costs");
    const Eigen::Index n = costs.front()->dimension();
    Eigen::MatrixXd P_sum = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd p_sum = Eigen::VectorXd::Zero(n);
    for (const auto& cost : costs) {
        if (cost->dimension() != n)
            throw DimensionMismatch("centralized_optimum: mixed dimensions");
        P_sum += cost->P();
        p_sum += cost->p();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(P_sum, Eigen::EigenvaluesOnly);
    const double lambda_min = eigs.eigenvalues().minCoeff();
    const double lambda_max = eigs.eigenvalues().maxCoeff();
    if (lambda_min <= 1e-10 * std::max(1.0, lambda_max))
        throw SingularSystem("centralized_optimum: sum of P_i is numerically singular");

    CentralizedOptimum result;
    result.z_star = Eigen::LDLT<Eigen::MatrixXd>(P_sum).solve(-p_sum);
    result.lambda_star.reserve(costs.size());
    for (const auto& cost : costs)
        result.lambda_star.push_back(-cost->gradient(result.z_star));
    return result;
}

std::string cost_to_text(const QuadraticCost& cost) {
    const Eigen::Index n = cost.dimension();
    std::ostringstream os;
    os << n << '\n';
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            os << format_double(cost.P()(r, c)) << (c + 1 == n ? '\n' : ' ');
    for (Eigen::Index c = 0; c < n; ++c)
        os << format_double(cost.p()[c]) << (c + 1 == n ? '\n' : ' ');
    return os.str();
}

QuadraticCost cost_from_text(const std::string& text) {
    std::istringstream is(text);
    Eigen::Index n = 0;
    if (!(is >> n) || n < 1)
        throw std::invalid_argument("cost text: bad dimension header");
    Eigen::MatrixXd P(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            if (!(is >> P(r, c)))
                throw std::invalid_argument("cost text: truncated matrix");
    Eigen::VectorXd p(n);
    for (Eigen::Index c = 0; c < n; ++c)
        if (!(is >> p[c])) throw std::invalid_argument("cost text: truncated vector");
    double extra = 0.0;
    if (is >> extra) throw std::invalid_argument("cost text: trailing values");
    return QuadraticCost(std::move(P), std::move(p));
}

}  // namespace qdra
