// Experiment harness: `solve` sweeps quantization levels and writes run CSVs,
// `gen-graph` emits a random strongly connected digraph in the text format,
// `check` runs the invariant smoke suite on a short run.
//
// Exit codes: 0 success, 1 run failure, 2 configuration error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "qdra/experiment.hpp"
#include "qdra/graph.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::vector<std::string> deltas;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> coordinator;
    std::optional<std::string> graph_file;
    std::optional<std::string> out_dir;
    std::optional<int> n_nodes;
    std::optional<int> dimension;
    std::optional<double> rho;
    std::optional<int> max_outer_iterations;
    std::optional<double> stop_tol;
    std::optional<int> patience;
    std::optional<double> extra_edge_probability;
    std::optional<std::string> width_policy;
    std::optional<long> max_fqac_rounds;
    bool trace_fqac = false;
};

qdra::ExperimentConfig resolve(const Overrides& o) {
    qdra::ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = qdra::parse_config_file(o.config_path);
    if (!o.deltas.empty()) cfg.deltas = o.deltas;
    if (o.seed) cfg.seed = *o.seed;
    if (o.coordinator) cfg.coordinator = *o.coordinator;
    if (o.graph_file) cfg.graph_file = *o.graph_file;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.n_nodes) cfg.n_nodes = *o.n_nodes;
    if (o.dimension) cfg.dimension = *o.dimension;
    if (o.rho) cfg.rho = *o.rho;
    if (o.max_outer_iterations) cfg.max_outer_iterations = *o.max_outer_iterations;
    if (o.stop_tol) cfg.stop_tol = *o.stop_tol;
    if (o.patience) cfg.patience = *o.patience;
    if (o.extra_edge_probability) cfg.extra_edge_probability = *o.extra_edge_probability;
    if (o.width_policy) cfg.width_policy = *o.width_policy;
    if (o.max_fqac_rounds) cfg.max_fqac_rounds = *o.max_fqac_rounds;
    if (o.trace_fqac) cfg.trace_fqac = true;
    cfg.validate();
    return cfg;
}

void add_override_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_path, "config file (key = value lines)");
    cmd.add_option("--delta", o.deltas, "quantization level (repeatable)");
    cmd.add_option("--seed", o.seed, "master seed");
    cmd.add_option("--coordinator", o.coordinator, "fqac | exact_average");
    cmd.add_option("--graph-file", o.graph_file, "load graph instead of generating");
    cmd.add_option("--out", o.out_dir, "output directory");
    cmd.add_option("--n_nodes", o.n_nodes, "number of nodes");
    cmd.add_option("--dimension", o.dimension, "decision-variable dimension");
    cmd.add_option("--rho", o.rho, "penalty parameter");
    cmd.add_option("--max_outer_iterations", o.max_outer_iterations, "iteration budget");
    cmd.add_option("--stop_tol", o.stop_tol, "z-hat stagnation threshold (0 = off)");
    cmd.add_option("--patience", o.patience, "stagnant iterations before stopping");
    cmd.add_option("--extra_edge_probability", o.extra_edge_probability,
                   "extra-edge probability of the generated graph");
    cmd.add_option("--width_policy", o.width_policy, "fixed:<bits> | adaptive");
    cmd.add_option("--max_fqac_rounds", o.max_fqac_rounds, "consensus round cap (0 = default)");
    cmd.add_flag("--trace-fqac", o.trace_fqac, "write per-round consensus traces");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized consensus optimization with quantized communication"};
    app.require_subcommand(1);

    Overrides solve_overrides;
    CLI::App* solve_cmd = app.add_subcommand("solve", "run the experiment sweep");
    add_override_flags(*solve_cmd, solve_overrides);

    int gen_nodes = 20;
    double gen_prob = 0.2;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    CLI::App* gen_cmd = app.add_subcommand("gen-graph", "generate a strongly connected digraph");
    gen_cmd->add_option("--nodes", gen_nodes, "node count")->required();
    gen_cmd->add_option("--extra-edge-prob", gen_prob, "extra-edge probability");
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    gen_cmd->add_option("--out", gen_out, "output file")->required();

    Overrides check_overrides;
    CLI::App* check_cmd = app.add_subcommand("check", "run the invariant smoke suite");
    add_override_flags(*check_cmd, check_overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the message; 0 for --help
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve_cmd->parsed()) {
            const auto cfg = resolve(solve_overrides);
            const auto result = qdra::run_experiment(cfg);
            for (const auto& run : result.runs) {
                if (run.failed)
                    std::cerr << "run " << run.label << " failed: " << run.error << '\n';
                else
                    std::cout << "run " << run.label << " -> " << run.csv_path << '\n';
            }
            std::cout << "summary -> " << result.summary_path << '\n';
            return result.any_failed ? 1 : 0;
        }
        if (gen_cmd->parsed()) {
            const auto graph =
                qdra::random_strongly_connected_digraph(gen_nodes, gen_prob, gen_seed);
            std::ofstream out(gen_out, std::ios::binary);
            if (!out) throw qdra::ConfigError("cannot write " + gen_out);
            out << graph.to_text();
            std::cout << "graph with " << graph.node_count() << " nodes, diameter "
                      << graph.diameter() << " -> " << gen_out << '\n';
            return 0;
        }
        const auto cfg = resolve(check_overrides);
        return qdra::check_experiment(cfg, std::cout) ? 0 : 1;
    } catch (const qdra::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const qdra::RejectedGraph& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
