#ifndef COVNET_POSTERIOR_HPP
#define COVNET_POSTERIOR_HPP

#include "covnet/model.hpp"

#include <Eigen/Dense>

namespace covnet {

/// Normal posterior N(mean, psi * scale) of a coefficient block given psi.
struct NormalPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scale;
};

/// Inverse Gamma in the rate parameterisation: density proportional to
/// psi^{-shape-1} exp(-rate / psi).
struct InverseGammaPosterior {
    double shape = 0.0;
    double rate = 0.0;

    /// rate / (shape - 1); +inf when shape <= 1.
    double mean() const;
};

struct FamilyPosterior {
    NormalPosterior gamma;
    NormalPosterior b;
    InverseGammaPosterior psi;
};

/// gamma_i | x_i, psi_i: mean (tau I + X'JX)^{-1} X'J y, scale
/// (tau I + X'JX)^{-1}. With k = 0 both summaries are empty.
NormalPosterior posterior_gamma(const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::MatrixXd>& j, double tau);

/// b_i | x_i, psi_i: mean (upsilon I + Q'J*Q)^{-1} Q'J* y, scale
/// (upsilon I + Q'J*Q)^{-1}, where J* = I - X (tau I + X'X)^{-1} X'.
/// J* deliberately uses the unweighted X'X, not X'JX.
NormalPosterior posterior_b(const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& x, const CovariateMatrix& q,
                            double tau, double upsilon);

/// psi_i | x_i ~ InvGamma((n + k + delta)/2, tau/2 + y'{J - JX(tau I + X'JX)^{-1}X'J}y / 2).
InverseGammaPosterior posterior_psi(const Eigen::Ref<const Eigen::VectorXd>& y,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x,
                                    const Eigen::Ref<const Eigen::MatrixXd>& j, double tau,
                                    double delta);

/// All three summaries for one family under the covariate model.
FamilyPosterior family_posterior(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& x,
                                 const CovariateMatrix& q, const Hyperparams& hp);

/// iid model (J = I, no covariate block); b is left empty.
FamilyPosterior family_posterior_iid(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x,
                                     const Hyperparams& hp);

}  // namespace covnet

#endif  // COVNET_POSTERIOR_HPP
