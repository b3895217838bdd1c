#include "ksync/network.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "ksync/errors.hpp"

namespace ksync {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t v) {
    while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    return v;
}

}  // namespace

bool is_connected(std::size_t node_count, const std::vector<Edge>& edges) {
    if (node_count == 0) return false;
    std::vector<std::size_t> parent(node_count);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::size_t components = node_count;
    for (const auto& e : edges) {
        if (e.from >= node_count || e.to >= node_count) continue;
        auto a = find_root(parent, e.from);
        auto b = find_root(parent, e.to);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

Network::Network(std::size_t node_count, std::vector<Edge> edges, std::string name)
    : n_(node_count), edges_(std::move(edges)), name_(std::move(name)) {
    if (n_ < 2) {
        throw Error(ErrorKind::InvalidGraph, "network needs at least two nodes");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        auto& e = edges_[k];
        if (e.from >= n_ || e.to >= n_) {
            throw Error(ErrorKind::InvalidGraph,
                        "edge " + std::to_string(k) + " references a node outside [0, " +
                            std::to_string(n_) + ")");
        }
        if (e.from == e.to) {
            throw Error(ErrorKind::InvalidGraph, "edge " + std::to_string(k) + " is a self-loop");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw Error(ErrorKind::NonPositiveWeight,
                        "edge " + std::to_string(k) + " has weight " + std::to_string(e.weight));
        }
        if (e.from > e.to) std::swap(e.from, e.to);
        if (!seen.emplace(e.from, e.to).second) {
            throw Error(ErrorKind::InvalidGraph,
                        "duplicate edge " + std::to_string(e.from) + "-" + std::to_string(e.to));
        }
    }
    if (!is_connected(n_, edges_)) {
        throw Error(ErrorKind::DisconnectedGraph, "network is not connected");
    }
}

}  // namespace ksync
