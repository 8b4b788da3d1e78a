#ifndef COVNET_METRICS_HPP
#define COVNET_METRICS_HPP

#include "covnet/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace covnet {

/// J = I - Q (upsilon I + Q'Q)^{-1} Q' together with its lower Cholesky
/// factor L (J = L L'). Scoring L'd with BGe gives the BGeCM score.
struct BgecmTransform {
    Eigen::MatrixXd j;
    Eigen::MatrixXd l;
    double upsilon = 1.0;
    double log_det_j = 0.0;
};

/// n x (n-m) matrix P with orthonormal columns spanning the orthogonal
/// complement of col(Q). Scoring P'd with BGe gives the residual score.
struct ResidualTransform {
    Eigen::MatrixXd p;
};

struct FamilyScore {
    NodeId node = 0;
    std::vector<NodeId> parent_set;
    double log_ml = 0.0;
};

struct ScoredNetwork {
    Dag dag;
    std::vector<FamilyScore> family_scores;
    double log_prior = 0.0;
    double total_log_score = 0.0;
};

/// Log density of the multivariate t with nu = delta + k degrees of freedom,
/// location 0 and scale (tau/nu) {I - X (tau I + X'X)^{-1} X'}^{-1}, at y.
/// X may have zero columns.
double family_log_marginal(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, double tau, double delta);

/// Same quantity from sufficient statistics: yy = y'y, xy = X'y, xx = X'X,
/// with n the length of y. This is the kernel every scorer goes through.
double family_log_marginal_from_gram(double yy, const Eigen::Ref<const Eigen::VectorXd>& xy,
                                     const Eigen::Ref<const Eigen::MatrixXd>& xx, Eigen::Index n,
                                     double tau, double delta);

BgecmTransform build_bgecm_transform(const CovariateMatrix& q, double upsilon);

ResidualTransform build_residual_transform(const CovariateMatrix& q);

/// Replaces every variable column x_i by T x_i. T must have data.n() columns.
Dataset transform_dataset(const Dataset& data, const Eigen::Ref<const Eigen::MatrixXd>& t);

/// Log density of x_i | x_{P_i} under the BGeCM model, built from the J-form
/// scale matrix on the untransformed data.
double bgecm_family_density(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                            const Hyperparams& hp);

/// bgecm_family_density minus the Jacobian term 0.5 * log det J, i.e. the
/// family score on the scale of the L'-transformed data. Computed without
/// forming L; used to cross-check the transform path.
double bgecm_family_direct(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                           const Hyperparams& hp);

/// Prepared scoring state for one (dataset, metric, hyperparameters) triple.
/// Applies the metric's data transform once and keeps the Gram matrix so a
/// family evaluation costs O(k^3).
class FamilyScorer {
public:
    FamilyScorer(const Dataset& data, const MetricSpec& metric, const Hyperparams& hp);

    /// Scores the columns of an already transformed data matrix with BGe.
    FamilyScorer(Eigen::MatrixXd prepared, const Hyperparams& hp);

    /// `parents` must be sorted, unique, exclude `node` and have fewer
    /// entries than effective_samples().
    double score(NodeId node, std::span<const NodeId> parents) const;

    int p() const { return static_cast<int>(prepared_.cols()); }
    Eigen::Index effective_samples() const { return prepared_.rows(); }
    const Eigen::MatrixXd& prepared() const { return prepared_; }
    const Hyperparams& hyperparams() const { return hp_; }

private:
    Eigen::MatrixXd prepared_;
    Eigen::MatrixXd gram_;
    Hyperparams hp_;
};

ScoredNetwork dag_log_score(const Dag& dag, const FamilyScorer& scorer, const GraphPrior& prior);

ScoredNetwork dag_log_score(const Dag& dag, const Dataset& data, const MetricSpec& metric,
                            const Hyperparams& hp, const GraphPrior& prior = GraphPrior::uniform());

}  // namespace covnet

#endif  // COVNET_METRICS_HPP
