#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qdra {

/// Thrown when a graph fails validation (bad size, bad endpoints, explicit
/// self-edges, or a missing directed path when strong connectivity is
/// required).
struct RejectedGraph : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A directed edge, stored as (to, from): `from` can transmit to `to`.
struct Edge {
    int to = 0;
    int from = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable digraph with 0-based node ids. Self-edges are implicit: they are
/// never stored, and neighbor queries exclude the node itself. Strong
/// connectivity and the diameter are established once at construction.
class DirectedGraph {
public:
    /// Builds a graph from `node_count` nodes and directed edges. Endpoints
    /// must lie in [0, node_count) and explicit self-edges are rejected.
    /// With `require_strong_connectivity` the constructor throws unless every
    /// ordered node pair is joined by a directed path.
    DirectedGraph(int node_count, std::vector<Edge> edges,
                  bool require_strong_connectivity = true);

    int node_count() const { return node_count_; }

    /// Edges sorted by (to, from); no duplicates, no self-edges.
    const std::vector<Edge>& edges() const { return edges_; }

    /// Nodes j with an edge j -> i (senders whose messages i receives).
    const std::vector<int>& in_neighbors(int i) const { return in_[check(i)]; }
    /// Nodes l with an edge i -> l (receivers node i can transmit to).
    const std::vector<int>& out_neighbors(int i) const { return out_[check(i)]; }

    int in_degree(int i) const { return static_cast<int>(in_neighbors(i).size()); }
    int out_degree(int i) const { return static_cast<int>(out_neighbors(i).size()); }

    bool has_edge(int to, int from) const;
    bool strongly_connected() const { return diameter_.has_value(); }

    /// Longest shortest directed path over all ordered pairs. Throws
    /// RejectedGraph when the graph is not strongly connected.
    int diameter() const;

    /// FNV-1a over node count and the sorted edge list; stable across runs.
    std::uint64_t hash() const;

    /// Line-oriented text format: first line N, then one `to from` pair per
    /// line, 1-indexed.
    std::string to_text() const;
    static DirectedGraph from_text(const std::string& text,
                                   bool require_strong_connectivity = true);

private:
    int check(int i) const {
        if (i < 0 || i >= node_count_) throw RejectedGraph("node id out of range");
        return i;
    }

    int node_count_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_;
    std::vector<std::vector<int>> out_;
    std::optional<int> diameter_;
};

/// Generates a strongly connected digraph: a directed Hamiltonian cycle over
/// a seeded random node order, plus every remaining ordered pair added
/// independently with `extra_edge_probability`. Deterministic per seed.
DirectedGraph random_strongly_connected_digraph(int n_nodes,
                                                double extra_edge_probability,
                                                std::uint64_t seed);

}  // namespace qdra
