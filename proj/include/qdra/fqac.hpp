#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qdra/graph.hpp"
#include "qdra/netsim.hpp"
#include "qdra/quantizer.hpp"

namespace qdra {

/// Internal protocol invariant broken (a bug, not an input error).
struct ProtocolViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Round cap exhausted without every node halting.
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-node protocol state. `chi` is the integer mass vector in units of
/// Delta, `xi` the piece count; `big_m`/`small_m` hold the max/min consensus
/// vectors of the running stopping test.
struct FqacState {
    IntVec chi;
    std::int64_t xi = 0;
    IntVec big_m;
    IntVec small_m;
    bool halted = false;
    IntVec result_lattice;  // valid once halted; z_hat = result_lattice * Delta
};

/// Initializes every node with xi = 2 and chi = 2 * quantize(y_i). The global
/// mass is then exactly 2 * sum_i quantize(y_i) and the piece total 2N.
std::vector<FqacState> fqac_init(const std::vector<Eigen::VectorXd>& y,
                                 const QuantizationLevel& level,
                                 const DirectedGraph& graph);

/// Executes one synchronous round (1-based round index t): epoch-start
/// max/min reset, broadcast-and-fold of the stopping vectors, mass splitting
/// with probabilistic forwarding over the out-neighbor closure, receive fold,
/// and the epoch-end halting test. Epochs have length max(D, 1).
void fqac_round(std::vector<FqacState>& states, const DirectedGraph& graph,
                RoundNetwork& network, NodeRngPool& rng, int t);

struct FqacResult {
    std::vector<Eigen::VectorXd> z_hat;   // per-node output m_i * Delta
    std::vector<IntVec> lattice;          // the same outputs as exact integers
    int rounds = 0;
    CommStats stats;                      // traffic of this run only
};

using FqacObserver = std::function<void(int round, const std::vector<FqacState>&)>;

/// Safety cap used when the caller passes max_rounds = 0: the rounds of
/// 100 * D * N epochs.
long fqac_default_max_rounds(const DirectedGraph& graph);

/// Runs the protocol to completion. All nodes halt in the same epoch (this is
/// asserted, not assumed); each output satisfies, per component and exactly
/// in integers, |N * m_i - sum_j quantize(y_j)| <= N, hence lies within Delta
/// of the average of the quantized inputs and within 2*Delta of the true mean.
FqacResult fqac_run(const std::vector<Eigen::VectorXd>& y,
                    const DirectedGraph& graph, const QuantizationLevel& level,
                    NodeRngPool& rng, WidthPolicy policy = WidthPolicy::fixed(32),
                    long max_rounds = 0, const FqacObserver& observer = {});

}  // namespace qdra
