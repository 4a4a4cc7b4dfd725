#include "qdra/fqac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdra {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return -floor_div(-a, b);
}

void check_conservation(const std::vector<FqacState>& states,
                        const IntVec& total_mass, std::int64_t total_pieces) {
    IntVec mass(total_mass.size(), 0);
    std::int64_t pieces = 0;
    for (const FqacState& s : states) {
        pieces += s.xi;
        for (std::size_t c = 0; c < mass.size(); ++c) mass[c] += s.chi[c];
    }
    if (mass != total_mass || pieces != total_pieces)
        throw ProtocolViolation("fqac: mass or piece-count conservation broken");
}

}  // namespace

std::vector<FqacState> fqac_init(const std::vector<Eigen::VectorXd>& y,
                                 const QuantizationLevel& level,
                                 const DirectedGraph& graph) {
    const auto n_nodes = static_cast<std::size_t>(graph.node_count());
    if (y.size() != n_nodes)
        throw std::invalid_argument("fqac_init: one input vector per node required");
    if (!graph.strongly_connected())
        throw RejectedGraph("fqac_init: graph must be strongly connected");

    std::vector<FqacState> states(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        FqacState& s = states[i];
        s.chi = quantize(y[i], level);
        for (std::int64_t& c : s.chi) {
            if (std::abs(c) > std::numeric_limits<std::int64_t>::max() / 2)
                throw std::overflow_error("fqac_init: quantized mass out of range");
            c *= 2;
        }
        s.xi = 2;
        s.big_m.assign(s.chi.size(), 0);
        s.small_m.assign(s.chi.size(), 0);
    }
    return states;
}

void fqac_round(std::vector<FqacState>& states, const DirectedGraph& graph,
                RoundNetwork& network, NodeRngPool& rng, int t) {
    const int n_nodes = graph.node_count();
    const int epoch_len = std::max(graph.diameter(), 1);
    const int epoch_pos = (t - 1) % epoch_len;
    const auto dim = states.front().chi.size();

    network.note_round();

    // Epoch start: reset the stopping vectors from the current piece average.
    if (epoch_pos == 0) {
        for (FqacState& s : states) {
            for (std::size_t c = 0; c < dim; ++c) {
                s.big_m[c] = ceil_div(s.chi[c], s.xi);
                s.small_m[c] = floor_div(s.chi[c], s.xi);
            }
        }
    }

    std::vector<Message> outbox;
    for (int i = 0; i < n_nodes; ++i) {
        FqacState& s = states[static_cast<std::size_t>(i)];
        if (s.halted)
            throw ProtocolViolation("fqac_round: called with a halted node");

        // Max/min consensus values travel every round.
        for (int l : graph.out_neighbors(i))
            outbox.push_back({MessageKind::MaxMinBroadcast, s.big_m, s.small_m, i, l, t});

        // Split off all but one piece; each split piece goes to a recipient
        // drawn uniformly from the out-neighbor closure N_i+ u {i}.
        const auto& outs = graph.out_neighbors(i);
        std::uniform_int_distribution<std::size_t> pick(0, outs.size());
        for (std::int64_t tau = s.xi; tau > 1; --tau) {
            if (s.xi <= 1) throw ProtocolViolation("fqac_round: piece count underflow");
            IntVec piece(dim);
            for (std::size_t c = 0; c < dim; ++c) {
                piece[c] = floor_div(s.chi[c], s.xi);
                s.chi[c] -= piece[c];
            }
            s.xi -= 1;
            const std::size_t slot = pick(rng.stream(i));
            const int dest = slot == outs.size() ? i : outs[slot];
            outbox.push_back({MessageKind::MassPiece, std::move(piece), {}, i, dest, t});
        }
    }

    const auto inboxes = network.deliver_round(outbox);
    for (int i = 0; i < n_nodes; ++i) {
        FqacState& s = states[static_cast<std::size_t>(i)];
        for (const Message& m : inboxes[static_cast<std::size_t>(i)]) {
            if (m.kind == MessageKind::MassPiece) {
                for (std::size_t c = 0; c < dim; ++c) s.chi[c] += m.payload[c];
                s.xi += 1;
            } else {
                for (std::size_t c = 0; c < dim; ++c) {
                    s.big_m[c] = std::max(s.big_m[c], m.payload[c]);
                    s.small_m[c] = std::min(s.small_m[c], m.payload2[c]);
                }
            }
        }
    }

    // Epoch end: if the propagated max and min agree to within one lattice
    // step everywhere, settle on the min.
    if (epoch_pos == epoch_len - 1) {
        for (FqacState& s : states) {
            std::int64_t gap = 0;
            for (std::size_t c = 0; c < dim; ++c)
                gap = std::max(gap, s.big_m[c] - s.small_m[c]);
            if (gap <= 1) {
                s.halted = true;
                s.result_lattice = s.small_m;
            }
        }
        // The stopping vectors are identical network-wide after a full epoch
        // of folding, so halting must be unanimous.
        const std::size_t halted = static_cast<std::size_t>(
            std::count_if(states.begin(), states.end(),
                          [](const FqacState& s) { return s.halted; }));
        if (halted != 0 && halted != states.size())
            throw ProtocolViolation("fqac_round: nodes halted non-simultaneously");
    }
}

long fqac_default_max_rounds(const DirectedGraph& graph) {
    const long epoch_len = std::max(graph.diameter(), 1);
    return 100L * epoch_len * graph.node_count() * epoch_len;
}

FqacResult fqac_run(const std::vector<Eigen::VectorXd>& y,
                    const DirectedGraph& graph, const QuantizationLevel& level,
                    NodeRngPool& rng, WidthPolicy policy, long max_rounds,
                    const FqacObserver& observer) {
    auto states = fqac_init(y, level, graph);
    if (max_rounds <= 0) max_rounds = fqac_default_max_rounds(graph);

    IntVec total_mass(states.front().chi.size(), 0);
    for (const FqacState& s : states)
        for (std::size_t c = 0; c < total_mass.size(); ++c) total_mass[c] += s.chi[c];
    const auto total_pieces = static_cast<std::int64_t>(2 * states.size());

    RoundNetwork network(graph, policy);
    for (int t = 1; t <= max_rounds; ++t) {
        fqac_round(states, graph, network, rng, t);
        check_conservation(states, total_mass, total_pieces);
        if (observer) observer(t, states);
        if (states.front().halted) {
            FqacResult result;
            result.rounds = t;
            result.stats = network.stats();
            for (const FqacState& s : states) {
                result.lattice.push_back(s.result_lattice);
                result.z_hat.push_back(dequantize(s.result_lattice, level));
            }
            return result;
        }
    }
    throw NoConvergence("fqac_run: round cap exhausted (" +
                        std::to_string(max_rounds) + " rounds)");
}

}  // namespace qdra
