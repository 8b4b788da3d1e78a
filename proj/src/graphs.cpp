#include "covnet/graphs.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace covnet {

namespace {

std::pair<NodeId, NodeId> canonical(NodeId a, NodeId b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

void check_same_p(const Dag& a, const Dag& b) {
    if (a.p() != b.p()) {
        throw ConstraintError("graphs have different node counts (" + std::to_string(a.p()) +
                              " vs " + std::to_string(b.p()) + ")");
    }
}

// DOT IDs: bare when alphanumeric identifier or numeral, quoted otherwise.
std::string dot_id(const std::string& name) {
    const bool numeral = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
    });
    const bool identifier =
        !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0])) &&
        std::all_of(name.begin(), name.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        });
    if (numeral || identifier) return name;
    std::string out = "\"";
    for (char c : name) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

void check_names(int p, const std::vector<std::string>& names) {
    if (names.size() != static_cast<std::size_t>(p)) {
        throw ConstraintError("expected " + std::to_string(p) + " node names, got " +
                              std::to_string(names.size()));
    }
}

}  // namespace

UndirectedGraph::UndirectedGraph(int p, const std::vector<std::pair<NodeId, NodeId>>& edges)
    : p_(p) {
    std::set<std::pair<NodeId, NodeId>> unique;
    for (auto [a, b] : edges) {
        if (a < 0 || b < 0 || a >= p || b >= p) throw ConstraintError("edge node out of range");
        if (a == b) throw ConstraintError("self-loop in undirected graph");
        unique.insert(canonical(a, b));
    }
    edges_.assign(unique.begin(), unique.end());
}

bool UndirectedGraph::has_edge(NodeId a, NodeId b) const {
    return std::binary_search(edges_.begin(), edges_.end(), canonical(a, b));
}

UndirectedGraph skeleton(const Dag& dag) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const Edge& e : dag.edges()) edges.emplace_back(e.from, e.to);
    return UndirectedGraph(dag.p(), edges);
}

UndirectedGraph moralize(const Dag& dag) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId v = 0; v < dag.p(); ++v) {
        const auto& ps = dag.parents(v);
        for (std::size_t a = 0; a < ps.size(); ++a) {
            edges.emplace_back(ps[a], v);
            for (std::size_t b = a + 1; b < ps.size(); ++b) edges.emplace_back(ps[a], ps[b]);
        }
    }
    return UndirectedGraph(dag.p(), edges);
}

std::vector<VStructure> v_structures(const Dag& dag) {
    const UndirectedGraph skel = skeleton(dag);
    std::vector<VStructure> out;
    for (NodeId c = 0; c < dag.p(); ++c) {
        const auto& ps = dag.parents(c);
        for (std::size_t a = 0; a < ps.size(); ++a) {
            for (std::size_t b = a + 1; b < ps.size(); ++b) {
                if (!skel.has_edge(ps[a], ps[b])) out.push_back({ps[a], c, ps[b]});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool markov_equivalent(const Dag& a, const Dag& b) {
    check_same_p(a, b);
    return skeleton(a) == skeleton(b) && v_structures(a) == v_structures(b);
}

EdgeAccuracy edge_accuracy(const Dag& estimated, const Dag& truth, bool directed) {
    check_same_p(estimated, truth);
    EdgeAccuracy acc;
    if (directed) {
        for (const Edge& e : estimated.edges()) {
            (truth.has_edge(e.from, e.to) ? acc.correct : acc.spurious)++;
        }
        acc.missing = static_cast<int>(truth.edge_count()) - acc.correct;
        return acc;
    }
    const UndirectedGraph est = skeleton(estimated);
    const UndirectedGraph tru = skeleton(truth);
    for (auto [a, b] : est.edges()) (tru.has_edge(a, b) ? acc.correct : acc.spurious)++;
    acc.missing = static_cast<int>(tru.edge_count()) - acc.correct;
    return acc;
}

std::string to_dot(const Dag& dag, const std::vector<std::string>& names) {
    check_names(dag.p(), names);
    std::ostringstream os;
    os << "digraph G {\n";
    for (const auto& name : names) os << "  " << dot_id(name) << ";\n";
    for (const Edge& e : dag.edges()) {
        os << "  " << dot_id(names[static_cast<std::size_t>(e.from)]) << " -> "
           << dot_id(names[static_cast<std::size_t>(e.to)]) << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::string to_dot(const UndirectedGraph& graph, const std::vector<std::string>& names) {
    check_names(graph.p(), names);
    std::ostringstream os;
    os << "graph G {\n";
    for (const auto& name : names) os << "  " << dot_id(name) << ";\n";
    for (auto [a, b] : graph.edges()) {
        os << "  " << dot_id(names[static_cast<std::size_t>(a)]) << " -- "
           << dot_id(names[static_cast<std::size_t>(b)]) << ";\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace covnet
