#ifndef COVNET_MODEL_HPP
#define COVNET_MODEL_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covnet {

/// Raised when an input violates a documented precondition (bad
/// dimensions, rank-deficient covariates, non-positive hyperparameters).
class ConstraintError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for numerical failures that valid inputs should never produce.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using NodeId = int;

struct Edge {
    NodeId from = 0;
    NodeId to = 0;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// n x p observation matrix (rows are samples) with one name per column.
class Dataset {
public:
    Dataset(Eigen::MatrixXd values, std::vector<std::string> names);
    /// Names default to X1..Xp.
    explicit Dataset(Eigen::MatrixXd values);

    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    Eigen::Index n() const { return values_.rows(); }
    Eigen::Index p() const { return values_.cols(); }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
};

/// n x m exogenous-variable matrix Q. Construction enforces full column
/// rank (SVD, tolerance 1e-10 * largest singular value) and m < n.
class CovariateMatrix {
public:
    explicit CovariateMatrix(Eigen::MatrixXd values, std::vector<std::string> names = {});

    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    Eigen::Index n() const { return values_.rows(); }
    Eigen::Index m() const { return values_.cols(); }
    double largest_singular_value() const { return sigma_max_; }

    /// True when the all-ones vector lies in the column space of Q, i.e. the
    /// covariates absorb a global intercept.
    bool spans_intercept(double tol = 1e-8) const;

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
    double sigma_max_ = 0.0;
};

struct Hyperparams {
    double tau = 1.0;
    double delta = 2.0;
    double upsilon = 1.0;

    void validate() const;
};

enum class GraphPriorKind { uniform, edge_penalty };

struct GraphPrior {
    GraphPriorKind kind = GraphPriorKind::uniform;
    double kappa = 1.0;

    static GraphPrior uniform() { return {}; }
    static GraphPrior edge_penalty(double kappa);

    void validate() const;
    double log_prior(std::size_t edge_count) const;
    /// Change in log prior when the edge count moves by `edge_change`.
    double log_prior_delta(int edge_change) const;
};

enum class MetricKind { bge, bgecm, residual };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& text);

struct MetricSpec {
    MetricKind kind = MetricKind::bge;
    std::optional<CovariateMatrix> covariates;
    /// Mean-center columns before scoring. Only honoured for kind=bge.
    bool center = true;

    static MetricSpec bge(bool center = true);
    static MetricSpec bgecm(CovariateMatrix q);
    static MetricSpec residual(CovariateMatrix q);

    /// Checks the covariate requirement of `kind` and, when `n` is given,
    /// that the covariate rows match the dataset.
    void validate(std::optional<Eigen::Index> n = std::nullopt) const;
};

/// Immutable directed acyclic graph on p nodes. Parent lists are kept sorted.
class Dag {
public:
    explicit Dag(int p = 0);
    Dag(int p, std::span<const Edge> edges);
    Dag(int p, std::initializer_list<Edge> edges);

    int p() const { return p_; }
    std::size_t edge_count() const { return edge_count_; }
    const std::vector<NodeId>& parents(NodeId v) const;
    const std::vector<std::vector<NodeId>>& parent_sets() const { return parents_; }
    bool has_edge(NodeId from, NodeId to) const;
    /// Edges sorted by (from, to).
    std::vector<Edge> edges() const;
    std::vector<NodeId> topological_order() const;

    friend bool operator==(const Dag& a, const Dag& b) {
        return a.p_ == b.p_ && a.parents_ == b.parents_;
    }

private:
    int p_ = 0;
    std::size_t edge_count_ = 0;
    std::vector<std::vector<NodeId>> parents_;
};

/// Sorted parent list of `v`; throws ConstraintError when v is out of range.
std::vector<NodeId> parents(const Dag& dag, NodeId v);

bool is_acyclic(std::span<const Edge> edges, int p);

}  // namespace covnet

#endif  // COVNET_MODEL_HPP
