#ifndef COVNET_GRAPHS_HPP
#define COVNET_GRAPHS_HPP

#include "covnet/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace covnet {

/// Undirected graph; each edge is stored once as (low, high).
class UndirectedGraph {
public:
    explicit UndirectedGraph(int p = 0) : p_(p) {}
    UndirectedGraph(int p, const std::vector<std::pair<NodeId, NodeId>>& edges);

    int p() const { return p_; }
    /// Sorted, canonical (low id first).
    const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }
    bool has_edge(NodeId a, NodeId b) const;

    friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

private:
    int p_ = 0;
    std::vector<std::pair<NodeId, NodeId>> edges_;
};

struct EdgeAccuracy {
    int correct = 0;
    int spurious = 0;
    int missing = 0;

    friend bool operator==(const EdgeAccuracy&, const EdgeAccuracy&) = default;
};

UndirectedGraph skeleton(const Dag& dag);

/// Skeleton plus an edge between every pair of parents sharing a child.
UndirectedGraph moralize(const Dag& dag);

struct VStructure {
    NodeId left = 0;  // left < right
    NodeId collider = 0;
    NodeId right = 0;

    friend auto operator<=>(const VStructure&, const VStructure&) = default;
};

/// Unshielded colliders a -> c <- b with a, b nonadjacent, sorted.
std::vector<VStructure> v_structures(const Dag& dag);

bool markov_equivalent(const Dag& a, const Dag& b);

/// Skeleton comparison by default; `directed` compares oriented edges.
EdgeAccuracy edge_accuracy(const Dag& estimated, const Dag& truth, bool directed = false);

std::string to_dot(const Dag& dag, const std::vector<std::string>& names);
std::string to_dot(const UndirectedGraph& graph, const std::vector<std::string>& names);

}  // namespace covnet

#endif  // COVNET_GRAPHS_HPP
