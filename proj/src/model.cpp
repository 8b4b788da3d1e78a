#include "covnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_set>

namespace covnet {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw ConstraintError(std::string(what) + " contains non-finite entries");
    }
}

std::vector<std::string> default_names(Eigen::Index p, const char* prefix) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        names.push_back(prefix + std::to_string(i + 1));
    }
    return names;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw ConstraintError("dataset needs at least one sample and one variable");
    }
    require_finite(values_, "dataset");
    if (names_.size() != static_cast<std::size_t>(values_.cols())) {
        throw ConstraintError("dataset has " + std::to_string(values_.cols()) + " columns but " +
                              std::to_string(names_.size()) + " names");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) {
            throw ConstraintError("duplicate variable name '" + name + "'");
        }
    }
}

Dataset::Dataset(Eigen::MatrixXd values)
    : Dataset(values, default_names(values.cols(), "X")) {}

CovariateMatrix::CovariateMatrix(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
    if (values_.cols() < 1) {
        throw ConstraintError("covariate matrix needs at least one column");
    }
    require_finite(values_, "covariate matrix");
    if (values_.cols() >= values_.rows()) {
        throw ConstraintError("covariate count m=" + std::to_string(values_.cols()) +
                              " must be smaller than sample count n=" +
                              std::to_string(values_.rows()));
    }
    if (names_.empty()) {
        names_ = default_names(values_.cols(), "Q");
    } else if (names_.size() != static_cast<std::size_t>(values_.cols())) {
        throw ConstraintError("covariate name count does not match column count");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(values_);
    const Eigen::VectorXd& s = svd.singularValues();
    sigma_max_ = s(0);
    const double tol = 1e-10 * sigma_max_;
    const auto rank = (s.array() > tol).count();
    if (sigma_max_ == 0.0 || rank < values_.cols()) {
        throw ConstraintError("covariate matrix is rank deficient (rank " + std::to_string(rank) +
                              " < m=" + std::to_string(values_.cols()) + ")");
    }
}

bool CovariateMatrix::spans_intercept(double tol) const {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(values_.rows());
    const Eigen::VectorXd coef = values_.colPivHouseholderQr().solve(ones);
    return (values_ * coef - ones).norm() <= tol * ones.norm();
}

void Hyperparams::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConstraintError("tau must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConstraintError("delta must be positive");
    if (!(upsilon > 0.0) || !std::isfinite(upsilon)) {
        throw ConstraintError("upsilon must be positive");
    }
}

GraphPrior GraphPrior::edge_penalty(double kappa) {
    GraphPrior prior{GraphPriorKind::edge_penalty, kappa};
    prior.validate();
    return prior;
}

void GraphPrior::validate() const {
    if (kind == GraphPriorKind::edge_penalty && !(kappa > 0.0 && kappa <= 1.0)) {
        throw ConstraintError("edge penalty kappa must lie in (0, 1]");
    }
}

double GraphPrior::log_prior(std::size_t edge_count) const {
    if (kind == GraphPriorKind::uniform) return 0.0;
    return static_cast<double>(edge_count) * std::log(kappa);
}

double GraphPrior::log_prior_delta(int edge_change) const {
    if (kind == GraphPriorKind::uniform) return 0.0;
    return edge_change * std::log(kappa);
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::bge: return "bge";
        case MetricKind::bgecm: return "bgecm";
        case MetricKind::residual: return "residual";
    }
    return "unknown";
}

MetricKind metric_kind_from_string(const std::string& text) {
    if (text == "bge") return MetricKind::bge;
    if (text == "bgecm") return MetricKind::bgecm;
    if (text == "residual") return MetricKind::residual;
    throw ConstraintError("unknown metric '" + text + "' (expected bge, bgecm or residual)");
}

MetricSpec MetricSpec::bge(bool center) { return {MetricKind::bge, std::nullopt, center}; }

MetricSpec MetricSpec::bgecm(CovariateMatrix q) {
    return {MetricKind::bgecm, std::move(q), false};
}

MetricSpec MetricSpec::residual(CovariateMatrix q) {
    return {MetricKind::residual, std::move(q), false};
}

void MetricSpec::validate(std::optional<Eigen::Index> n) const {
    if (kind == MetricKind::bge) {
        if (covariates) throw ConstraintError("the bge metric does not take covariates");
        return;
    }
    if (!covariates) {
        throw ConstraintError("the " + to_string(kind) + " metric requires covariates");
    }
    if (n && covariates->n() != *n) {
        throw ConstraintError("covariates have " + std::to_string(covariates->n()) +
                              " rows but the dataset has " + std::to_string(*n));
    }
}

Dag::Dag(int p) : p_(p), parents_(static_cast<std::size_t>(std::max(p, 0))) {
    if (p < 0) throw ConstraintError("node count must be nonnegative");
}

Dag::Dag(int p, std::initializer_list<Edge> edges)
    : Dag(p, std::span<const Edge>(edges.begin(), edges.size())) {}

Dag::Dag(int p, std::span<const Edge> edges) : Dag(p) {
    std::set<Edge> unique;
    for (const Edge& e : edges) {
        if (e.from < 0 || e.from >= p || e.to < 0 || e.to >= p) {
            throw ConstraintError("edge (" + std::to_string(e.from) + "->" +
                                  std::to_string(e.to) + ") references a node outside 0.." +
                                  std::to_string(p - 1));
        }
        if (e.from == e.to) throw ConstraintError("self-loop on node " + std::to_string(e.from));
        if (!unique.insert(e).second) {
            throw ConstraintError("duplicate edge " + std::to_string(e.from) + "->" +
                                  std::to_string(e.to));
        }
    }
    if (!is_acyclic(edges, p)) throw ConstraintError("edge set contains a directed cycle");
    for (const Edge& e : unique) parents_[static_cast<std::size_t>(e.to)].push_back(e.from);
    for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
    edge_count_ = unique.size();
}

const std::vector<NodeId>& Dag::parents(NodeId v) const {
    if (v < 0 || v >= p_) {
        throw ConstraintError("node " + std::to_string(v) + " out of range for p=" +
                              std::to_string(p_));
    }
    return parents_[static_cast<std::size_t>(v)];
}

bool Dag::has_edge(NodeId from, NodeId to) const {
    const auto& ps = parents(to);
    return std::binary_search(ps.begin(), ps.end(), from);
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId v = 0; v < p_; ++v) {
        for (NodeId u : parents_[static_cast<std::size_t>(v)]) out.push_back({u, v});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> Dag::topological_order() const {
    std::vector<int> indegree(static_cast<std::size_t>(p_), 0);
    std::vector<std::vector<NodeId>> children(static_cast<std::size_t>(p_));
    for (NodeId v = 0; v < p_; ++v) {
        for (NodeId u : parents_[static_cast<std::size_t>(v)]) {
            children[static_cast<std::size_t>(u)].push_back(v);
            ++indegree[static_cast<std::size_t>(v)];
        }
    }
    // Min-heap keeps the order deterministic: smallest ready id first.
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < p_; ++v) {
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
    std::vector<NodeId> order;
    order.reserve(static_cast<std::size_t>(p_));
    while (!ready.empty()) {
        NodeId u = ready.top();
        ready.pop();
        order.push_back(u);
        for (NodeId c : children[static_cast<std::size_t>(u)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
        }
    }
    return order;
}

std::vector<NodeId> parents(const Dag& dag, NodeId v) { return dag.parents(v); }

bool is_acyclic(std::span<const Edge> edges, int p) {
    if (p <= 0) return edges.empty();
    std::vector<int> indegree(static_cast<std::size_t>(p), 0);
    std::vector<std::vector<NodeId>> children(static_cast<std::size_t>(p));
    for (const Edge& e : edges) {
        if (e.from < 0 || e.from >= p || e.to < 0 || e.to >= p) return false;
        if (e.from == e.to) return false;
        children[static_cast<std::size_t>(e.from)].push_back(e.to);
        ++indegree[static_cast<std::size_t>(e.to)];
    }
    std::vector<NodeId> stack;
    for (NodeId v = 0; v < p; ++v) {
        if (indegree[static_cast<std::size_t>(v)] == 0) stack.push_back(v);
    }
    int visited = 0;
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        ++visited;
        for (NodeId c : children[static_cast<std::size_t>(u)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) stack.push_back(c);
        }
    }
    return visited == p;
}

}  // namespace covnet
