#include "covnet/metrics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace covnet {

namespace {

void check_hyper(double tau, double delta) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConstraintError("tau must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConstraintError("delta must be positive");
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& values) {
    return values.rowwise() - values.colwise().mean();
}

// J = I - Q (upsilon I + Q'Q)^{-1} Q', symmetrised.
Eigen::MatrixXd j_matrix(const Eigen::MatrixXd& q, double upsilon) {
    const Eigen::Index n = q.rows();
    Eigen::MatrixXd inner = q.transpose() * q;
    inner.diagonal().array() += upsilon;
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("factorisation of upsilon I + Q'Q failed");
    }
    // Q (inner)^{-1} Q' = W'W with W = L^{-1} Q'.
    Eigen::MatrixXd w = llt.matrixL().solve(q.transpose());
    Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n) - w.transpose() * w;
    return 0.5 * (j + j.transpose());
}

}  // namespace

double family_log_marginal_from_gram(double yy, const Eigen::Ref<const Eigen::VectorXd>& xy,
                                     const Eigen::Ref<const Eigen::MatrixXd>& xx, Eigen::Index n,
                                     double tau, double delta) {
    check_hyper(tau, delta);
    if (n < 1) throw ConstraintError("family marginal needs at least one sample");
    const Eigen::Index k = xx.rows();
    if (xx.cols() != k || xy.size() != k) {
        throw ConstraintError("inconsistent sufficient statistics for family marginal");
    }
    if (!std::isfinite(yy) || !xy.allFinite() || !xx.allFinite()) {
        throw ConstraintError("non-finite input to family marginal");
    }

    const double nu = delta + static_cast<double>(k);
    const double nd = static_cast<double>(n);

    double log_det_a = 0.0;
    double quad = yy;
    if (k > 0) {
        Eigen::MatrixXd a = xx;
        a.diagonal().array() += tau;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("factorisation of tau I + X'X failed");
        }
        log_det_a = log_det_from_llt(llt);
        const Eigen::VectorXd z = llt.matrixL().solve(xy);
        quad -= z.squaredNorm();
    }
    // y'(I - X A^{-1} X')y is a PSD quadratic form; round-off can push it
    // marginally negative.
    if (quad < 0.0) quad = 0.0;

    // log|Sigma| = n log(tau/nu) - k log tau + log det A and
    // y' Sigma^{-1} y / nu = quad / tau.
    return std::lgamma(0.5 * (nu + nd)) - std::lgamma(0.5 * nu) -
           0.5 * nd * std::log(std::numbers::pi * tau) +
           0.5 * static_cast<double>(k) * std::log(tau) - 0.5 * log_det_a -
           0.5 * (nu + nd) * std::log1p(quad / tau);
}

double family_log_marginal(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, double tau, double delta) {
    if (x.cols() > 0 && x.rows() != y.size()) {
        throw ConstraintError("parent matrix has " + std::to_string(x.rows()) +
                              " rows but y has " + std::to_string(y.size()));
    }
    if (!y.allFinite() || !x.allFinite()) {
        throw ConstraintError("non-finite input to family marginal");
    }
    const Eigen::MatrixXd xx = x.transpose() * x;
    const Eigen::VectorXd xy = x.transpose() * y;
    return family_log_marginal_from_gram(y.squaredNorm(), xy, xx, y.size(), tau, delta);
}

BgecmTransform build_bgecm_transform(const CovariateMatrix& q, double upsilon) {
    if (!(upsilon > 0.0) || !std::isfinite(upsilon)) {
        throw ConstraintError("upsilon must be positive");
    }
    BgecmTransform out;
    out.upsilon = upsilon;
    out.j = j_matrix(q.values(), upsilon);

    Eigen::LLT<Eigen::MatrixXd> llt(out.j);
    if (llt.info() != Eigen::Success) {
        const double n = static_cast<double>(out.j.rows());
        Eigen::MatrixXd jittered = out.j;
        jittered.diagonal().array() += 1e-12 * out.j.trace() / n;
        llt.compute(jittered);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Cholesky factorisation of J failed after jitter");
        }
    }
    out.l = llt.matrixL();
    out.log_det_j = log_det_from_llt(llt);
    return out;
}

ResidualTransform build_residual_transform(const CovariateMatrix& q) {
    const Eigen::Index n = q.n();
    const Eigen::Index m = q.m();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q.values());
    const Eigen::MatrixXd full = qr.householderQ();
    return {full.rightCols(n - m)};
}

Dataset transform_dataset(const Dataset& data, const Eigen::Ref<const Eigen::MatrixXd>& t) {
    if (t.cols() != data.n()) {
        throw ConstraintError("transform has " + std::to_string(t.cols()) +
                              " columns but the dataset has " + std::to_string(data.n()) +
                              " samples");
    }
    return Dataset(t * data.values(), data.names());
}

double bgecm_family_density(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                            const Hyperparams& hp) {
    hp.validate();
    const Eigen::Index n = y.size();
    const Eigen::Index k = x.cols();
    if (q.n() != n || (k > 0 && x.rows() != n)) {
        throw ConstraintError("bgecm family inputs have inconsistent sample counts");
    }
    if (!y.allFinite() || !x.allFinite()) {
        throw ConstraintError("non-finite input to family marginal");
    }

    const Eigen::MatrixXd j = j_matrix(q.values(), hp.upsilon);
    // S = J - J X (tau I + X'JX)^{-1} X'J is the inverse scale up to tau/nu.
    Eigen::MatrixXd s = j;
    if (k > 0) {
        const Eigen::MatrixXd jx = j * x;
        Eigen::MatrixXd a = x.transpose() * jx;
        a.diagonal().array() += hp.tau;
        s -= jx * a.ldlt().solve(jx.transpose());
        s = 0.5 * (s + s.transpose());
    }
    Eigen::LLT<Eigen::MatrixXd> s_llt(s);
    if (s_llt.info() != Eigen::Success) {
        throw NumericalError("J-form scale matrix is not positive definite");
    }
    const double nu = hp.delta + static_cast<double>(k);
    const double nd = static_cast<double>(n);
    const double log_det_sigma = nd * std::log(hp.tau / nu) - log_det_from_llt(s_llt);
    const double quad = y.dot(s * y);
    return std::lgamma(0.5 * (nu + nd)) - std::lgamma(0.5 * nu) -
           0.5 * nd * std::log(nu * std::numbers::pi) - 0.5 * log_det_sigma -
           0.5 * (nu + nd) * std::log1p(quad / hp.tau);
}

double bgecm_family_direct(const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                           const Hyperparams& hp) {
    const double density = bgecm_family_density(y, x, q, hp);
    // log det J = m log(upsilon) - log det(upsilon I + Q'Q).
    Eigen::MatrixXd inner = q.values().transpose() * q.values();
    inner.diagonal().array() += hp.upsilon;
    const double log_det_j = static_cast<double>(q.m()) * std::log(hp.upsilon) -
                             inner.ldlt().vectorD().array().log().sum();
    return density - 0.5 * log_det_j;
}

FamilyScorer::FamilyScorer(const Dataset& data, const MetricSpec& metric, const Hyperparams& hp)
    : hp_(hp) {
    hp_.validate();
    metric.validate(data.n());
    switch (metric.kind) {
        case MetricKind::bge:
            prepared_ = metric.center ? centered(data.values()) : data.values();
            break;
        case MetricKind::bgecm: {
            const BgecmTransform t = build_bgecm_transform(*metric.covariates, hp_.upsilon);
            prepared_ = t.l.transpose() * data.values();
            break;
        }
        case MetricKind::residual: {
            const ResidualTransform t = build_residual_transform(*metric.covariates);
            prepared_ = t.p.transpose() * data.values();
            break;
        }
    }
    gram_ = prepared_.transpose() * prepared_;
}

FamilyScorer::FamilyScorer(Eigen::MatrixXd prepared, const Hyperparams& hp)
    : prepared_(std::move(prepared)), hp_(hp) {
    hp_.validate();
    if (prepared_.rows() < 1) throw ConstraintError("prepared data has no rows");
    gram_ = prepared_.transpose() * prepared_;
}

double FamilyScorer::score(NodeId node, std::span<const NodeId> parents) const {
    const auto k = static_cast<Eigen::Index>(parents.size());
    if (node < 0 || node >= p()) throw ConstraintError("node out of range");
    if (k >= effective_samples()) {
        throw ConstraintError("node " + std::to_string(node) + " has " + std::to_string(k) +
                              " parents but only " + std::to_string(effective_samples()) +
                              " effective samples");
    }
    Eigen::VectorXd xy(k);
    Eigen::MatrixXd xx(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const NodeId pa = parents[static_cast<std::size_t>(a)];
        if (pa < 0 || pa >= p() || pa == node) throw ConstraintError("invalid parent id");
        xy(a) = gram_(pa, node);
        for (Eigen::Index b = 0; b < k; ++b) {
            xx(a, b) = gram_(pa, parents[static_cast<std::size_t>(b)]);
        }
    }
    return family_log_marginal_from_gram(gram_(node, node), xy, xx, effective_samples(), hp_.tau,
                                         hp_.delta);
}

ScoredNetwork dag_log_score(const Dag& dag, const FamilyScorer& scorer, const GraphPrior& prior) {
    prior.validate();
    if (dag.p() != scorer.p()) {
        throw ConstraintError("graph has " + std::to_string(dag.p()) +
                              " nodes but the data has " + std::to_string(scorer.p()) +
                              " variables");
    }
    ScoredNetwork out{dag, {}, prior.log_prior(dag.edge_count()), 0.0};
    out.family_scores.reserve(static_cast<std::size_t>(dag.p()));
    double total = out.log_prior;
    for (NodeId v = 0; v < dag.p(); ++v) {
        const auto& ps = dag.parents(v);
        const double s = scorer.score(v, ps);
        out.family_scores.push_back({v, ps, s});
        total += s;
    }
    out.total_log_score = total;
    return out;
}

ScoredNetwork dag_log_score(const Dag& dag, const Dataset& data, const MetricSpec& metric,
                            const Hyperparams& hp, const GraphPrior& prior) {
    const FamilyScorer scorer(data, metric, hp);
    return dag_log_score(dag, scorer, prior);
}

}  // namespace covnet
