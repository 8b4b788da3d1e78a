#include "covnet/posterior.hpp"

#include "covnet/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace covnet {

namespace {

void check_dims(Eigen::Index n, const Eigen::Ref<const Eigen::MatrixXd>& x,
                const Eigen::Ref<const Eigen::MatrixXd>& j) {
    if (x.cols() > 0 && x.rows() != n) {
        throw ConstraintError("parent matrix rows (" + std::to_string(x.rows()) +
                              ") do not match y length (" + std::to_string(n) + ")");
    }
    if (j.rows() != n || j.cols() != n) {
        throw ConstraintError("J must be " + std::to_string(n) + " x " + std::to_string(n));
    }
}

Eigen::MatrixXd symmetric_inverse(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index k) {
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(k, k));
    return 0.5 * (inv + inv.transpose());
}

Eigen::LLT<Eigen::MatrixXd> ridge_factor(Eigen::MatrixXd gram, double ridge, const char* what) {
    gram.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string("factorisation of ") + what + " failed");
    }
    return llt;
}

}  // namespace

double InverseGammaPosterior::mean() const {
    if (shape <= 1.0) return std::numeric_limits<double>::infinity();
    return rate / (shape - 1.0);
}

NormalPosterior posterior_gamma(const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::MatrixXd>& j, double tau) {
    check_dims(y.size(), x, j);
    if (!(tau > 0.0)) throw ConstraintError("tau must be positive");
    const Eigen::Index k = x.cols();
    if (k == 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};

    const Eigen::MatrixXd jx = j * x;
    const auto llt = ridge_factor(x.transpose() * jx, tau, "tau I + X'JX");
    return {llt.solve(jx.transpose() * y), symmetric_inverse(llt, k)};
}

NormalPosterior posterior_b(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                            double tau, double upsilon) {
    const Eigen::Index n = y.size();
    if (q.n() != n) throw ConstraintError("covariate rows do not match y length");
    if (x.cols() > 0 && x.rows() != n) throw ConstraintError("parent matrix rows mismatch");
    if (!(tau > 0.0) || !(upsilon > 0.0)) {
        throw ConstraintError("tau and upsilon must be positive");
    }
    const Eigen::MatrixXd& qm = q.values();

    // J* applied to Q and y without forming the n x n matrix.
    Eigen::MatrixXd jq = qm;
    Eigen::VectorXd jy = y;
    if (x.cols() > 0) {
        const auto a = ridge_factor(x.transpose() * x, tau, "tau I + X'X");
        jq -= x * a.solve(x.transpose() * qm);
        jy -= x * a.solve(x.transpose() * y);
    }
    const auto llt = ridge_factor(qm.transpose() * jq, upsilon, "upsilon I + Q'J*Q");
    return {llt.solve(qm.transpose() * jy), symmetric_inverse(llt, q.m())};
}

InverseGammaPosterior posterior_psi(const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x,
                                    const Eigen::Ref<const Eigen::MatrixXd>& j, double tau,
                                    double delta) {
    check_dims(y.size(), x, j);
    if (!(tau > 0.0) || !(delta > 0.0)) throw ConstraintError("tau and delta must be positive");
    const Eigen::Index k = x.cols();
    const Eigen::VectorXd jy = j * y;
    double quad = y.dot(jy);
    if (k > 0) {
        const Eigen::MatrixXd jx = j * x;
        const auto llt = ridge_factor(x.transpose() * jx, tau, "tau I + X'JX");
        const Eigen::VectorXd z = llt.matrixL().solve(x.transpose() * jy);
        quad -= z.squaredNorm();
    }
    if (quad < 0.0) quad = 0.0;
    return {0.5 * (static_cast<double>(y.size() + k) + delta), 0.5 * tau + 0.5 * quad};
}

FamilyPosterior family_posterior(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& x,
                                 const CovariateMatrix& q, const Hyperparams& hp) {
    hp.validate();
    const BgecmTransform t = build_bgecm_transform(q, hp.upsilon);
    return {posterior_gamma(y, x, t.j, hp.tau), posterior_b(y, x, q, hp.tau, hp.upsilon),
            posterior_psi(y, x, t.j, hp.tau, hp.delta)};
}

FamilyPosterior family_posterior_iid(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x,
                                     const Hyperparams& hp) {
    hp.validate();
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(y.size(), y.size());
    return {posterior_gamma(y, x, identity, hp.tau),
            {Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)},
            posterior_psi(y, x, identity, hp.tau, hp.delta)};
}

}  // namespace covnet
