#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdra/graph.hpp"
#include "qdra/quantizer.hpp"

namespace qdra {

struct IllegalEdge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MessageKind { MassPiece, MaxMinBroadcast };

/// One simulated packet. MassPiece carries a single integer vector in
/// `payload`; MaxMinBroadcast carries the max vector in `payload` and the min
/// vector in `payload2`.
struct Message {
    MessageKind kind = MessageKind::MassPiece;
    IntVec payload;
    IntVec payload2;
    int from = 0;
    int to = 0;
    int round = 0;
};

/// Payload width accounting: fixed bits per integer component, or adaptive
/// (per component ceil(log2(|v|+1)) + 1, i.e. magnitude bits plus sign).
struct WidthPolicy {
    enum class Kind { Fixed, Adaptive };
    Kind kind = Kind::Fixed;
    int width = 32;

    static WidthPolicy fixed(int w) { return {Kind::Fixed, w}; }
    static WidthPolicy adaptive() { return {Kind::Adaptive, 0}; }

    std::string to_string() const;
    static WidthPolicy parse(const std::string& text);
};

std::uint64_t bit_cost(const Message& m, const WidthPolicy& policy);

/// Counters are monotone within a run. `equivalent_float_bits` prices the
/// same traffic at a fixed float width (the unquantized alternative).
struct CommStats {
    std::uint64_t messages = 0;
    std::uint64_t integer_payload_bits = 0;
    std::uint64_t rounds = 0;
    std::uint64_t equivalent_float_bits = 0;

    CommStats& operator+=(const CommStats& other) {
        messages += other.messages;
        integer_payload_bits += other.integer_payload_bits;
        rounds += other.rounds;
        equivalent_float_bits += other.equivalent_float_bits;
        return *this;
    }
};

/// Deterministic sub-seed derivation (splitmix64 mixing); used to carve
/// independent streams out of one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_tag);

/// One independent deterministic stream per node id, derived from the master
/// seed, so adding a node never perturbs the other nodes' draws.
class NodeRngPool {
public:
    NodeRngPool(std::uint64_t seed, int node_count);
    std::mt19937_64& stream(int node);
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::vector<std::mt19937_64> streams_;
};

/// Synchronous, lossless round delivery over a digraph. Every message must
/// target an out-neighbor of its sender or the sender itself; self-deliveries
/// are local and do not touch the traffic counters.
class RoundNetwork {
public:
    RoundNetwork(const DirectedGraph& graph, WidthPolicy policy,
                 int float_width_bits = 64);

    /// Delivers one round of traffic: each message lands in exactly one
    /// inbox. Accumulates message and bit counters as a side effect.
    std::vector<std::vector<Message>> deliver_round(const std::vector<Message>& outbox);

    /// Protocol-level round tick; deliver_round never advances this itself.
    void note_round() { ++stats_.rounds; }

    const CommStats& stats() const { return stats_; }
    const WidthPolicy& policy() const { return policy_; }

private:
    const DirectedGraph& graph_;
    WidthPolicy policy_;
    int float_width_bits_;
    CommStats stats_;
};

}  // namespace qdra
