#ifndef COVNET_SIMGEN_HPP
#define COVNET_SIMGEN_HPP

#include "covnet/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace covnet {

/// Generating parameters: psi (length p), gamma[i] (one coefficient per
/// parent of i, parents in sorted order) and b (p x m, row i is b_i).
struct TrueParams {
    Eigen::VectorXd psi;
    std::vector<Eigen::VectorXd> gamma;
    Eigen::MatrixXd b;
};

struct SimOutput {
    Dataset data;
    CovariateMatrix covariates;
    Dag truth;
    TrueParams params;
};

/// Seed of an independent sub-stream, SplitMix64 mixing of
/// (seed, stream, a, b). Streams are std::mt19937_64 engines seeded with it.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                          std::uint64_t b);

/// The fixed 10 x 3 covariate matrix of the second simulation design.
Eigen::MatrixXd example2_covariates();

/// Two groups of 50 samples, p = 100 independent variables with
/// group-specific means: x_ijk = b_ij + e_ijk, psi_i ~ InvGamma(1, 1/2),
/// b_ij ~ N(0, psi_i). Parameters are shared by all replicates.
std::vector<SimOutput> gen_example1(std::uint64_t seed, int replicates = 10);

/// n = 10, p = 20, fixed 10 x 3 Q, true graph {1->19, 2->19, 19->20}
/// (1-indexed). Parameters are shared by all replicates.
std::vector<SimOutput> gen_example2(std::uint64_t seed, int replicates = 10);

/// One dataset from the covariate model: psi_i ~ InvGamma((delta + k_i)/2,
/// tau/2), gamma_i ~ N(0, psi_i/tau I), b_i ~ N(0, psi_i/upsilon I), sampled
/// in topological order as x_i = X_{P_i} gamma_i + Q b_i + e_i.
SimOutput gen_generic(const Dag& truth, const CovariateMatrix& q, const Hyperparams& hp,
                      Eigen::Index n, std::uint64_t seed);

}  // namespace covnet

#endif  // COVNET_SIMGEN_HPP
