#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ksync {

/// Undirected weighted edge, stored with `from < to`. The incidence matrix
/// orients it from -> to.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 1.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted undirected connected graph with a fixed edge orientation.
///
/// Construction validates the graph: at least two nodes, no self-loops, no
/// duplicate edges, strictly positive weights, connected. Edges given with
/// `from > to` are flipped so that every stored edge satisfies `from < to`.
/// Edge order is preserved; it determines column order of the incidence
/// matrix and the spanning tree picked by `build_operators`.
class Network {
public:
    Network(std::size_t node_count, std::vector<Edge> edges, std::string name = {});

    std::size_t node_count() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::string& name() const noexcept { return name_; }

    bool is_tree() const noexcept { return edges_.size() + 1 == n_; }

private:
    std::size_t n_;
    std::vector<Edge> edges_;
    std::string name_;
};

/// True if the edge list spans all `node_count` nodes.
bool is_connected(std::size_t node_count, const std::vector<Edge>& edges);

}  // namespace ksync
