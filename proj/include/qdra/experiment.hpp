#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdra/graph.hpp"
#include "qdra/metrics.hpp"
#include "qdra/netsim.hpp"
#include "qdra/optimizer.hpp"

namespace qdra {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full experiment description. Defaults reproduce the reference setup:
/// 20 nodes, dimension 20, rho = 1, quantization sweep 1e-3, 1e-4, 1e-5. The
/// iteration budget is sized so the finest level reaches its quantization
/// floor before the run ends.
struct ExperimentConfig {
    int n_nodes = 20;
    int dimension = 20;
    double rho = 1.0;
    std::vector<std::string> deltas = {"1e-3", "1e-4", "1e-5"};
    std::uint64_t seed = 1;
    int max_outer_iterations = 600;
    double stop_tol = 0.0;  // 0 disables the stagnation early stop
    int patience = 10;
    double extra_edge_probability = 0.2;
    std::string graph_file;  // empty: generate from seed
    std::string coordinator = "fqac";
    std::string width_policy = "fixed:32";
    std::string out_dir = "out";
    bool trace_fqac = false;
    long max_fqac_rounds = 0;  // 0: protocol default cap

    void validate() const;
};

/// Parses the line-oriented `key = value` config format (# comments, blank
/// lines allowed). Unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Random strongly convex quadratics: symmetric A_i with standard-normal
/// upper triangle, P_i = A_i^T A_i + eps*I with eps = 1e-6 tr(A_i^T A_i)/n,
/// p_i = -A_i^T b_i for standard-normal b_i. Deterministic per seed.
std::vector<std::shared_ptr<const QuadraticCost>> generate_quadratics(
    int dimension, int count, std::uint64_t seed);

/// Convex-only variant: A_i is projected to rank dimension - deficiency
/// before squaring and no ridge is added, so each P_i is positive
/// semidefinite singular. The sum of the P_i must still be invertible.
std::vector<std::shared_ptr<const QuadraticCost>> generate_quadratics_rank_deficient(
    int dimension, int count, std::uint64_t seed, int deficiency = 2);

struct SolveOptions {
    double rho = 1.0;
    std::optional<QuantizationLevel> level;  // empty: exact-average coordinator
    std::string level_text = "exact_average";
    std::uint64_t seed = 1;
    int max_outer_iterations = 600;
    double stop_tol = 0.0;
    int patience = 10;
    WidthPolicy policy = WidthPolicy::fixed(32);
    long max_fqac_rounds = 0;
    std::string fqac_trace_path;  // empty: no trace
};

/// Runs the decentralized solver: K outer iterations (with optional
/// stagnation early stop), per-iteration bound checks and metrics, common
/// random z-hat and per-node random lambda-hat initialization from the seed.
/// Inner errors propagate; when `partial` is given it receives the rows
/// recorded up to the failure (with a `failed` metadata key).
RunRecord solve(const DirectedGraph& graph,
                const std::vector<std::shared_ptr<const QuadraticCost>>& costs,
                const SolveOptions& options, RunRecord* partial = nullptr);

struct SweepRun {
    std::string label;     // delta string or "exact_average"
    std::string csv_path;  // file the record went to
    bool failed = false;
    std::string error;
    RunRecord record;
};

struct ExperimentResult {
    std::vector<SweepRun> runs;
    std::string summary_path;
    std::string meta_path;
    bool any_failed = false;
};

/// One solver run per quantization level plus an exact-average baseline, all
/// sharing the same graph, costs, and initialization; writes one CSV per run,
/// summary.csv, and a meta file with the resolved configuration. Per-run
/// failures are recorded and do not abort the sweep.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Invariant smoke check: a short run whose bound checks and conservation
/// properties are escalated to pass/fail results. Returns true when all pass;
/// prints one line per check to the given stream.
bool check_experiment(const ExperimentConfig& config, std::ostream& out);

}  // namespace qdra
