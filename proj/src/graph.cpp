#include "qdra/graph.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>

namespace qdra {
namespace {

// BFS from `source`; returns hop distances, -1 for unreachable nodes.
std::vector<int> bfs_distances(int source, const std::vector<std::vector<int>>& out) {
    std::vector<int> dist(out.size(), -1);
    std::deque<int> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : out[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

DirectedGraph::DirectedGraph(int node_count, std::vector<Edge> edges,
                             bool require_strong_connectivity)
    : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ < 2) throw RejectedGraph("graph needs at least 2 nodes");
    for (const Edge& e : edges_) {
        if (e.to < 0 || e.to >= node_count_ || e.from < 0 || e.from >= node_count_)
            throw RejectedGraph("edge endpoint out of range");
        if (e.to == e.from) throw RejectedGraph("explicit self-edge");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    in_.resize(node_count_);
    out_.resize(node_count_);
    for (const Edge& e : edges_) {
        in_[e.to].push_back(e.from);
        out_[e.from].push_back(e.to);
    }
    for (auto& v : in_) std::sort(v.begin(), v.end());
    for (auto& v : out_) std::sort(v.begin(), v.end());

    // One BFS per source yields both the connectivity verdict and the
    // diameter; D is always recomputed, never trusted from input.
    int longest = 0;
    bool connected = true;
    for (int s = 0; s < node_count_ && connected; ++s) {
        const auto dist = bfs_distances(s, out_);
        for (int v = 0; v < node_count_; ++v) {
            if (dist[v] < 0) {
                connected = false;
                break;
            }
            longest = std::max(longest, dist[v]);
        }
    }
    if (connected) diameter_ = longest;
    if (require_strong_connectivity && !connected)
        throw RejectedGraph("graph is not strongly connected");
}

bool DirectedGraph::has_edge(int to, int from) const {
    check(to);
    const auto& outs = out_[check(from)];
    return std::binary_search(outs.begin(), outs.end(), to);
}

int DirectedGraph::diameter() const {
    if (!diameter_) throw RejectedGraph("diameter undefined: graph is not strongly connected");
    return *diameter_;
}

std::uint64_t DirectedGraph::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(node_count_));
    for (const Edge& e : edges_) {
        mix(static_cast<std::uint64_t>(e.to));
        mix(static_cast<std::uint64_t>(e.from));
    }
    return h;
}

std::string DirectedGraph::to_text() const {
    std::ostringstream os;
    os << node_count_ << '\n';
    for (const Edge& e : edges_) os << (e.to + 1) << ' ' << (e.from + 1) << '\n';
    return os.str();
}

DirectedGraph DirectedGraph::from_text(const std::string& text,
                                       bool require_strong_connectivity) {
    std::istringstream is(text);
    int n = 0;
    if (!(is >> n)) throw RejectedGraph("graph text: missing node count");
    std::vector<Edge> edges;
    int to = 0, from = 0;
    while (is >> to >> from) edges.push_back({to - 1, from - 1});
    if (!is.eof()) throw RejectedGraph("graph text: trailing garbage");
    return DirectedGraph(n, std::move(edges), require_strong_connectivity);
}

DirectedGraph random_strongly_connected_digraph(int n_nodes,
                                                double extra_edge_probability,
                                                std::uint64_t seed) {
    if (n_nodes < 2) throw RejectedGraph("graph needs at least 2 nodes");
    if (!(extra_edge_probability >= 0.0 && extra_edge_probability <= 1.0))
        throw RejectedGraph("edge probability must lie in [0,1]");

    std::mt19937_64 rng(seed);
    std::vector<int> order(n_nodes);
    for (int i = 0; i < n_nodes; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Edge> edges;
    std::vector<std::vector<char>> present(n_nodes, std::vector<char>(n_nodes, 0));
    for (int i = 0; i < n_nodes; ++i) {
        const int from = order[i];
        const int to = order[(i + 1) % n_nodes];
        edges.push_back({to, from});
        present[to][from] = 1;
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int to = 0; to < n_nodes; ++to)
        for (int from = 0; from < n_nodes; ++from) {
            if (to == from || present[to][from]) continue;
            if (coin(rng) < extra_edge_probability) edges.push_back({to, from});
        }
    return DirectedGraph(n_nodes, std::move(edges), true);
}

}  // namespace qdra
