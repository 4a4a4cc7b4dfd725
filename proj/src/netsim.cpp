#include "qdra/netsim.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>

namespace qdra {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t adaptive_bits(const IntVec& v) {
    std::uint64_t bits = 0;
    for (std::int64_t c : v) {
        const auto mag = c < 0 ? 0 - static_cast<std::uint64_t>(c)
                               : static_cast<std::uint64_t>(c);
        bits += std::bit_width(mag) + 1;  // == ceil(log2(|c|+1)) + 1
    }
    return bits;
}

std::uint64_t component_count(const Message& m) {
    std::uint64_t n = m.payload.size();
    if (m.kind == MessageKind::MaxMinBroadcast) n += m.payload2.size();
    return n;
}

}  // namespace

std::string WidthPolicy::to_string() const {
    return kind == Kind::Adaptive ? "adaptive" : "fixed:" + std::to_string(width);
}

WidthPolicy WidthPolicy::parse(const std::string& text) {
    if (text == "adaptive") return adaptive();
    if (text.rfind("fixed:", 0) == 0) {
        const int w = std::atoi(text.c_str() + 6);
        if (w > 0 && w <= 256) return fixed(w);
    }
    throw std::invalid_argument("bad width policy: '" + text + "' (want fixed:<w> or adaptive)");
}

std::uint64_t bit_cost(const Message& m, const WidthPolicy& policy) {
    if (policy.kind == WidthPolicy::Kind::Fixed)
        return component_count(m) * static_cast<std::uint64_t>(policy.width);
    std::uint64_t bits = adaptive_bits(m.payload);
    if (m.kind == MessageKind::MaxMinBroadcast) bits += adaptive_bits(m.payload2);
    return bits;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_tag) {
    return splitmix64(master ^ splitmix64(stream_tag));
}

NodeRngPool::NodeRngPool(std::uint64_t seed, int node_count) : seed_(seed) {
    streams_.reserve(static_cast<std::size_t>(node_count));
    for (int i = 0; i < node_count; ++i)
        streams_.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i) + 1));
}

std::mt19937_64& NodeRngPool::stream(int node) {
    return streams_.at(static_cast<std::size_t>(node));
}

RoundNetwork::RoundNetwork(const DirectedGraph& graph, WidthPolicy policy,
                           int float_width_bits)
    : graph_(graph), policy_(policy), float_width_bits_(float_width_bits) {}

std::vector<std::vector<Message>> RoundNetwork::deliver_round(
    const std::vector<Message>& outbox) {
    std::vector<std::vector<Message>> inboxes(
        static_cast<std::size_t>(graph_.node_count()));
    for (const Message& m : outbox) {
        if (m.to != m.from && !graph_.has_edge(m.to, m.from))
            throw IllegalEdge("message targets a non-neighbor: " +
                              std::to_string(m.from) + " -> " + std::to_string(m.to));
        if (m.to != m.from) {
            ++stats_.messages;
            stats_.integer_payload_bits += bit_cost(m, policy_);
            stats_.equivalent_float_bits +=
                component_count(m) * static_cast<std::uint64_t>(float_width_bits_);
        }
        inboxes[static_cast<std::size_t>(m.to)].push_back(m);
    }
    return inboxes;
}

}  // namespace qdra
