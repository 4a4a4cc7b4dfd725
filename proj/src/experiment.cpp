#include "qdra/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace qdra {
namespace {

namespace fs = std::filesystem;

// Fixed stream tags so the graph, costs, initialization, and protocol draws
// come from independent substreams of one master seed.
constexpr std::uint64_t kGraphStream = 0x6772617068ull;
constexpr std::uint64_t kCostStream = 0x636f737473ull;
constexpr std::uint64_t kInitStream = 0x696e6974ull;
constexpr std::uint64_t kFqacStream = 0x66716163ull;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, sep)) parts.push_back(trim(item));
    return parts;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    T value{};
    if (!(is >> value) || !(is >> std::ws).eof())
        throw ConfigError("bad value for '" + key + "': " + text);
    return value;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string sanitize_label(const std::string& label) {
    std::string out = label;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "n_nodes") cfg.n_nodes = parse_number<int>(value, key);
    else if (key == "dimension") cfg.dimension = parse_number<int>(value, key);
    else if (key == "rho") cfg.rho = parse_number<double>(value, key);
    else if (key == "deltas") cfg.deltas = split(value, ',');
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, key);
    else if (key == "max_outer_iterations")
        cfg.max_outer_iterations = parse_number<int>(value, key);
    else if (key == "stop_tol") cfg.stop_tol = parse_number<double>(value, key);
    else if (key == "patience") cfg.patience = parse_number<int>(value, key);
    else if (key == "extra_edge_probability")
        cfg.extra_edge_probability = parse_number<double>(value, key);
    else if (key == "graph_file") cfg.graph_file = value;
    else if (key == "coordinator") cfg.coordinator = value;
    else if (key == "width_policy") cfg.width_policy = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "trace_fqac") cfg.trace_fqac = parse_number<int>(value, key) != 0;
    else if (key == "max_fqac_rounds") cfg.max_fqac_rounds = parse_number<long>(value, key);
    else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n_nodes < 2) throw ConfigError("n_nodes must be at least 2");
    if (dimension < 1) throw ConfigError("dimension must be positive");
    if (rho <= 0.0) throw ConfigError("rho must be positive");
    if (deltas.empty()) throw ConfigError("deltas must be non-empty");
    try {
        for (const std::string& d : deltas) QuantizationLevel::from_decimal(d);
        WidthPolicy::parse(width_policy);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be positive");
    if (stop_tol < 0.0) throw ConfigError("stop_tol must be non-negative");
    if (patience < 1) throw ConfigError("patience must be positive");
    if (extra_edge_probability < 0.0 || extra_edge_probability > 1.0)
        throw ConfigError("extra_edge_probability must lie in [0,1]");
    if (coordinator != "fqac" && coordinator != "exact_average")
        throw ConfigError("coordinator must be 'fqac' or 'exact_average'");
    if (out_dir.empty()) throw ConfigError("out_dir must be non-empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    return parse_config_text(read_file(path));
}

std::vector<std::shared_ptr<const QuadraticCost>> generate_quadratics(
    int dimension, int count, std::uint64_t seed) {
    if (dimension < 1) throw ConfigError("generate_quadratics: dimension must be positive");
    if (count < 2) throw ConfigError("generate_quadratics: need at least 2 costs");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::shared_ptr<const QuadraticCost>> costs;
    costs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::MatrixXd A(dimension, dimension);
        for (int r = 0; r < dimension; ++r)
            for (int c = r; c < dimension; ++c) {
                const double v = gauss(rng);
                A(r, c) = v;
                A(c, r) = v;
            }
        Eigen::MatrixXd P = A.transpose() * A;
        const double ridge = 1e-6 * P.trace() / dimension;
        P += ridge * Eigen::MatrixXd::Identity(dimension, dimension);
        Eigen::VectorXd b(dimension);
        for (int r = 0; r < dimension; ++r) b[r] = gauss(rng);
        costs.push_back(std::make_shared<QuadraticCost>(std::move(P), -A.transpose() * b));
    }
    return costs;
}

std::vector<std::shared_ptr<const QuadraticCost>> generate_quadratics_rank_deficient(
    int dimension, int count, std::uint64_t seed, int deficiency) {
    if (dimension < 1) throw ConfigError("generate_quadratics: dimension must be positive");
    if (count < 2) throw ConfigError("generate_quadratics: need at least 2 costs");
    if (deficiency < 1 || deficiency >= dimension)
        throw ConfigError("generate_quadratics: bad rank deficiency");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::shared_ptr<const QuadraticCost>> costs;
    costs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::MatrixXd A(dimension, dimension);
        for (int r = 0; r < dimension; ++r)
            for (int c = r; c < dimension; ++c) {
                const double v = gauss(rng);
                A(r, c) = v;
                A(c, r) = v;
            }
        // Drop the eigendirections of smallest magnitude, then square: P is
        // positive semidefinite with a deficiency-dimensional null space.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(A);
        Eigen::VectorXd d = eigs.eigenvalues();
        std::vector<int> order(static_cast<std::size_t>(dimension));
        for (int r = 0; r < dimension; ++r) order[static_cast<std::size_t>(r)] = r;
        std::sort(order.begin(), order.end(), [&d](int a, int b) {
            return std::abs(d[a]) < std::abs(d[b]);
        });
        for (int r = 0; r < deficiency; ++r) d[order[static_cast<std::size_t>(r)]] = 0.0;
        const Eigen::MatrixXd& V = eigs.eigenvectors();
        Eigen::MatrixXd A_low = V * d.asDiagonal() * V.transpose();
        Eigen::MatrixXd P =
            V * d.cwiseProduct(d).asDiagonal() * V.transpose();
        P = ((P + P.transpose()) / 2.0).eval();
        Eigen::VectorXd b(dimension);
        for (int r = 0; r < dimension; ++r) b[r] = gauss(rng);
        costs.push_back(std::make_shared<QuadraticCost>(std::move(P), -A_low.transpose() * b));
    }
    return costs;
}

RunRecord solve(const DirectedGraph& graph,
                const std::vector<std::shared_ptr<const QuadraticCost>>& costs,
                const SolveOptions& options, RunRecord* partial) {
    const int n_nodes = graph.node_count();
    if (costs.size() != static_cast<std::size_t>(n_nodes))
        throw DimensionMismatch("solve: one cost per node required");
    if (options.rho <= 0.0) throw ConfigError("solve: rho must be positive");
    const Eigen::Index dim = costs.front()->dimension();

    const CentralizedOptimum optimum = centralized_optimum(costs);

    double mu_min = costs.front()->mu(), l_max = costs.front()->lipschitz();
    bool all_strongly_convex = true;
    for (const auto& cost : costs) {
        mu_min = std::min(mu_min, cost->mu());
        l_max = std::max(l_max, cost->lipschitz());
        all_strongly_convex = all_strongly_convex && cost->strongly_convex();
    }

    // Common z-hat draw plus one lambda-hat draw per node. Sharing the z draw
    // across nodes keeps the exact-average configuration bit-comparable with
    // the centralized baseline.
    std::mt19937_64 init_rng(derive_seed(options.seed, kInitStream));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::VectorXd z0(dim);
    for (Eigen::Index c = 0; c < dim; ++c) z0[c] = unit(init_rng);
    std::vector<NodeState> nodes(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) {
        NodeState& node = nodes[static_cast<std::size_t>(i)];
        node.z_hat = z0;
        node.lambda_hat.resize(dim);
        for (Eigen::Index c = 0; c < dim; ++c) node.lambda_hat[c] = unit(init_rng);
        node.x = Eigen::VectorXd::Zero(dim);
        node.g = Eigen::VectorXd::Zero(dim);
        node.cost = costs[static_cast<std::size_t>(i)];
    }

    NodeRngPool pool(derive_seed(options.seed, kFqacStream), n_nodes);

    std::ofstream trace;
    if (!options.fqac_trace_path.empty()) {
        trace.open(options.fqac_trace_path, std::ios::binary);
        if (!trace) throw ConfigError("cannot write " + options.fqac_trace_path);
        trace << "iteration,round,node,xi,maxmin_gap,chi\n";
    }

    RunRecord record;
    double m_z = (z0 - optimum.z_star).norm();

    const auto fill_metadata = [&](RunRecord& target) {
        const double delta = options.level ? options.level->value() : 0.0;
        target.set_meta("coordinator", options.level ? "fqac" : "exact_average");
        target.set_meta("delta", options.level_text);
        target.set_meta("rho", format_double(options.rho));
        target.set_meta("n_nodes", std::to_string(n_nodes));
        target.set_meta("dimension", std::to_string(dim));
        target.set_meta("seed", std::to_string(options.seed));
        target.set_meta("graph_hash", hex64(graph.hash()));
        target.set_meta("graph_diameter", std::to_string(graph.diameter()));
        target.set_meta("regime",
                        all_strongly_convex ? "strongly-convex" : "convex-smooth");
        target.set_meta("mu_min", format_double(mu_min));
        target.set_meta("lipschitz_max", format_double(l_max));
        target.set_meta("width_policy", options.policy.to_string());
        target.set_meta("max_outer_iterations",
                        std::to_string(options.max_outer_iterations));
        target.set_meta("stop_tol", format_double(options.stop_tol));
        target.set_meta("patience", std::to_string(options.patience));
        target.set_meta("m_z", format_double(m_z));
        target.set_meta("neighborhood_bound",
                        format_double(6.0 * options.rho * m_z * n_nodes * delta));
        target.set_meta("init", "z_hat common U[-1,1]^n; lambda_hat per-node U[-1,1]^n");
    };

    int stagnant = 0;
    try {
        for (int k = 1; k <= options.max_outer_iterations; ++k) {
            IterationSnapshot snapshot;
            snapshot.z_hat_before.reserve(nodes.size());
            snapshot.lambda_hat_before.reserve(nodes.size());
            for (const NodeState& node : nodes) {
                snapshot.z_hat_before.push_back(node.z_hat);
                snapshot.lambda_hat_before.push_back(node.lambda_hat);
            }
    
            FqacObserver observer;
            if (trace.is_open()) {
                observer = [&trace, k](int round, const std::vector<FqacState>& states) {
                    for (std::size_t i = 0; i < states.size(); ++i) {
                        const FqacState& s = states[i];
                        std::int64_t gap = 0;
                        for (std::size_t c = 0; c < s.chi.size(); ++c)
                            gap = std::max(gap, s.big_m[c] - s.small_m[c]);
                        trace << k << ',' << round << ',' << i << ',' << s.xi << ','
                              << gap << ',';
                        for (std::size_t c = 0; c < s.chi.size(); ++c) {
                            if (c) trace << ';';
                            trace << s.chi[c];
                        }
                        trace << '\n';
                    }
                };
            }
    
            const StepReport report =
                qudrc_aladin_step(nodes, graph, options.rho, options.level, pool,
                                  options.policy, options.max_fqac_rounds, observer);
    
            snapshot.nodes_after = &nodes;
            snapshot.y_bar = report.y_bar;
            snapshot.y = &report.y;
            snapshot.lattice = &report.lattice;
            const BoundChecks checks =
                bound_check_iteration(snapshot, options.rho, options.level);
    
            Eigen::VectorXd z_repr = Eigen::VectorXd::Zero(dim);
            for (const NodeState& node : nodes) z_repr += node.z_hat;
            z_repr /= static_cast<double>(n_nodes);
            m_z = std::max(m_z, (z_repr - optimum.z_star).norm());
    
            double solution_error = 0.0;
            std::vector<Eigen::VectorXd> lambdas;
            lambdas.reserve(nodes.size());
            for (const NodeState& node : nodes) {
                solution_error += (node.x - optimum.z_star).norm();
                lambdas.push_back(node.lambda_hat);
            }
    
            RunRow row;
            row.k = k;
            row.solution_error = solution_error;
            row.lyapunov = lyapunov(z_repr, lambdas, optimum.z_star, optimum.lambda_star,
                                    options.rho);
            row.fqac_rounds = report.fqac_rounds;
            row.messages = report.stats.messages;
            row.bits_quantized = report.stats.integer_payload_bits;
            row.bits_float_equivalent = report.stats.equivalent_float_bits;
            row.consensus_bounds_ok = checks.consensus_bounds_ok;
            row.dual_sum_ok = checks.dual_sum_ok;
            row.identity_residual = checks.identity_residual;
            row.zhat_spread = checks.zhat_spread;
            record.append(row);
    
            if (options.stop_tol > 0.0) {
                double step_size = 0.0;
                for (std::size_t i = 0; i < nodes.size(); ++i)
                    step_size = std::max(step_size,
                                         (nodes[i].z_hat - snapshot.z_hat_before[i])
                                             .lpNorm<Eigen::Infinity>());
                stagnant = step_size < options.stop_tol ? stagnant + 1 : 0;
                if (stagnant >= options.patience) break;
            }
        }
    } catch (...) {
        if (partial) {
            fill_metadata(record);
            record.set_meta("failed", "1");
            *partial = std::move(record);
        }
        throw;
    }

    fill_metadata(record);
    return record;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);

    DirectedGraph graph =
        config.graph_file.empty()
            ? random_strongly_connected_digraph(config.n_nodes,
                                                config.extra_edge_probability,
                                                derive_seed(config.seed, kGraphStream))
            : DirectedGraph::from_text(read_file(config.graph_file));
    const auto costs = generate_quadratics(config.dimension, graph.node_count(),
                                           derive_seed(config.seed, kCostStream));

    std::vector<std::string> labels;
    if (config.coordinator == "fqac") labels = config.deltas;
    labels.emplace_back("exact_average");

    ExperimentResult result;
    for (const std::string& label : labels) {
        SolveOptions options;
        options.rho = config.rho;
        options.seed = config.seed;
        options.max_outer_iterations = config.max_outer_iterations;
        options.stop_tol = config.stop_tol;
        options.patience = config.patience;
        options.policy = WidthPolicy::parse(config.width_policy);
        options.max_fqac_rounds = config.max_fqac_rounds;
        options.level_text = label;
        if (label != "exact_average")
            options.level = QuantizationLevel::from_decimal(label);

        SweepRun run;
        run.label = label;
        const std::string base = "run_" + sanitize_label(label);
        run.csv_path = (fs::path(config.out_dir) / (base + ".csv")).string();
        if (config.trace_fqac && options.level)
            options.fqac_trace_path =
                (fs::path(config.out_dir) / (base + ".fqac_trace.csv")).string();
        RunRecord partial;
        try {
            run.record = solve(graph, costs, options, &partial);
            run.record.write_csv(run.csv_path);
        } catch (const std::exception& e) {
            run.failed = true;
            run.error = e.what();
            result.any_failed = true;
            run.record = std::move(partial);
            run.record.write_csv(run.csv_path);  // partial trace plus failed flag
        }
        result.runs.push_back(std::move(run));
    }

    // Sweep summary: plateau statistics and communication totals per run.
    result.summary_path = (fs::path(config.out_dir) / "summary.csv").string();
    {
        std::ofstream out(result.summary_path, std::ios::binary);
        out << "run,plateau_error,iterations_to_plateau,total_bits,total_fqac_rounds\n";
        for (const SweepRun& run : result.runs) {
            if (run.failed) {
                out << run.label << ",failed,,,\n";
                continue;
            }
            std::vector<double> errors;
            std::uint64_t total_bits = 0;
            long total_rounds = 0;
            for (const RunRow& row : run.record.rows()) {
                errors.push_back(row.solution_error);
                total_bits += row.bits_quantized;
                total_rounds += row.fqac_rounds;
            }
            const double plateau = plateau_floor(errors);
            int to_plateau = static_cast<int>(errors.size());
            for (std::size_t k = 0; k < errors.size(); ++k)
                if (errors[k] <= 2.0 * plateau) {
                    to_plateau = static_cast<int>(k + 1);
                    break;
                }
            out << run.label << ',' << format_double(plateau) << ',' << to_plateau
                << ',' << total_bits << ',' << total_rounds << '\n';
        }
    }

    // Resolved configuration and per-run status.
    result.meta_path = (fs::path(config.out_dir) / "meta.txt").string();
    {
        std::ofstream out(result.meta_path, std::ios::binary);
        out << "n_nodes = " << graph.node_count() << '\n';
        out << "dimension = " << config.dimension << '\n';
        out << "rho = " << format_double(config.rho) << '\n';
        out << "deltas =";
        for (std::size_t i = 0; i < config.deltas.size(); ++i)
            out << (i ? "," : " ") << config.deltas[i];
        out << '\n';
        out << "seed = " << config.seed << '\n';
        out << "max_outer_iterations = " << config.max_outer_iterations << '\n';
        out << "stop_tol = " << format_double(config.stop_tol) << '\n';
        out << "patience = " << config.patience << '\n';
        out << "graph_source = "
            << (config.graph_file.empty() ? std::string("generated") : config.graph_file)
            << '\n';
        out << "extra_edge_probability = " << format_double(config.extra_edge_probability)
            << '\n';
        out << "graph_generator = hamiltonian-cycle-plus-iid-extra-edges\n";
        out << "graph_hash = " << hex64(graph.hash()) << '\n';
        out << "graph_diameter = " << graph.diameter() << '\n';
        out << "coordinator = " << config.coordinator << '\n';
        out << "width_policy = " << config.width_policy << '\n';
        out << "cost_ridge = 1e-6*trace/dimension\n";
        out << "init = z_hat common U[-1,1]^n; lambda_hat per-node U[-1,1]^n\n";
        for (const SweepRun& run : result.runs)
            out << "run " << run.label << " = "
                << (run.failed ? "failed: " + run.error : "ok") << '\n';
    }
    return result;
}

bool check_experiment(const ExperimentConfig& config, std::ostream& out) {
    config.validate();
    auto report = [&out](const char* name, bool ok, const std::string& detail) {
        out << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out << ": " << detail;
        out << '\n';
        return ok;
    };

    bool all_ok = true;
    DirectedGraph graph =
        config.graph_file.empty()
            ? random_strongly_connected_digraph(config.n_nodes,
                                                config.extra_edge_probability,
                                                derive_seed(config.seed, kGraphStream))
            : DirectedGraph::from_text(read_file(config.graph_file));
    all_ok &= report("graph-strongly-connected", graph.strongly_connected(),
                     "diameter " + std::to_string(graph.diameter()));

    const auto costs = generate_quadratics(config.dimension, graph.node_count(),
                                           derive_seed(config.seed, kCostStream));
    double mu_min = costs.front()->mu();
    for (const auto& c : costs) mu_min = std::min(mu_min, c->mu());
    all_ok &= report("costs-strongly-convex", mu_min > 0.0,
                     "mu_min " + format_double(mu_min));

    SolveOptions options;
    options.rho = config.rho;
    options.seed = config.seed;
    options.max_outer_iterations = std::min(config.max_outer_iterations, 25);
    options.policy = WidthPolicy::parse(config.width_policy);
    options.max_fqac_rounds = config.max_fqac_rounds;
    if (config.coordinator == "fqac") {
        options.level = QuantizationLevel::from_decimal(config.deltas.front());
        options.level_text = config.deltas.front();
    }

    try {
        const RunRecord record = solve(graph, costs, options);
        bool consensus_bounds = true, dual_sum = true, identity_holds = true;
        double worst_residual = 0.0;
        for (const RunRow& row : record.rows()) {
            consensus_bounds = consensus_bounds && row.consensus_bounds_ok;
            dual_sum = dual_sum && row.dual_sum_ok;
            identity_holds = identity_holds && row.identity_residual <= 1e-9;
            worst_residual = std::max(worst_residual, row.identity_residual);
        }
        all_ok &= report("consensus-error-bounds", consensus_bounds, "");
        all_ok &= report("dual-sum-bound", dual_sum, "");
        all_ok &= report("primal-dual-identity", identity_holds,
                         "worst residual " + format_double(worst_residual));

        const RunRecord again = solve(graph, costs, options);
        all_ok &= report("determinism", again.to_csv() == record.to_csv(), "");
    } catch (const std::exception& e) {
        all_ok &= report("solver-run", false, e.what());
    }
    return all_ok;
}

}  // namespace qdra
