#include "covnet/simgen.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <random>
#include <string>

namespace covnet {

namespace {

enum Stream : std::uint64_t { kParams = 1, kNoise = 2 };

class Stream64 {
public:
    explicit Stream64(std::uint64_t seed) : engine_(seed) {}

    double normal(double variance) {
        boost::random::normal_distribution<double> dist(0.0, std::sqrt(variance));
        return dist(engine_);
    }

    // Reciprocal of a Gamma(shape, rate) draw.
    double inverse_gamma(double shape, double rate) {
        boost::random::gamma_distribution<double> dist(shape, 1.0 / rate);
        return 1.0 / dist(engine_);
    }

private:
    std::mt19937_64 engine_;
};

std::vector<std::string> names(const char* prefix, Eigen::Index count) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

// Draws psi, then b (m entries), then gamma (k entries) from variable i's
// parameter stream.
void draw_params(std::uint64_t seed, NodeId i, double psi_shape, double psi_rate,
                 double b_precision, double gamma_precision, Eigen::Index m, std::size_t k,
                 TrueParams& params) {
    Stream64 rng(derive_seed(seed, kParams, static_cast<std::uint64_t>(i), 0));
    const double psi = rng.inverse_gamma(psi_shape, psi_rate);
    params.psi(i) = psi;
    for (Eigen::Index j = 0; j < m; ++j) params.b(i, j) = rng.normal(psi / b_precision);
    Eigen::VectorXd gamma(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < gamma.size(); ++j) gamma(j) = rng.normal(psi / gamma_precision);
    params.gamma[static_cast<std::size_t>(i)] = gamma;
}

Eigen::MatrixXd sample_data(std::uint64_t seed, int replicate, const Dag& truth,
                            const Eigen::MatrixXd& q, const TrueParams& params) {
    const Eigen::Index n = q.rows();
    Eigen::MatrixXd x(n, truth.p());
    for (NodeId i : truth.topological_order()) {
        Stream64 rng(derive_seed(seed, kNoise, static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(replicate)));
        Eigen::VectorXd col = q * params.b.row(i).transpose();
        const auto& ps = truth.parents(i);
        const Eigen::VectorXd& gamma = params.gamma[static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < ps.size(); ++a) {
            col += gamma(static_cast<Eigen::Index>(a)) * x.col(ps[a]);
        }
        for (Eigen::Index k = 0; k < n; ++k) col(k) += rng.normal(params.psi(i));
        x.col(i) = col;
    }
    return x;
}

TrueParams empty_params(int p, Eigen::Index m) {
    return {Eigen::VectorXd::Zero(p), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(p)),
            Eigen::MatrixXd::Zero(p, m)};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                          std::uint64_t b) {
    const auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ stream);
    h = mix(h ^ a);
    return mix(h ^ b);
}

Eigen::MatrixXd example2_covariates() {
    Eigen::MatrixXd q(10, 3);
    q << -1.32, 0.83, -1.74,
          0.22, -1.37, 0.55,
          0.37, 0.61, 0.60,
         -1.53, 1.52, 0.82,
         -0.73, -0.01, 0.93,
          0.92, 0.87, -0.09,
          1.02, -0.44, -0.04,
          0.27, -0.59, 0.11,
         -0.64, 0.20, -0.21,
         -0.15, 0.48, -0.12;
    return q;
}

std::vector<SimOutput> gen_example1(std::uint64_t seed, int replicates) {
    if (replicates < 1) throw ConstraintError("replicates must be at least 1");
    constexpr int p = 100;
    constexpr Eigen::Index per_group = 50;
    constexpr Eigen::Index n = 2 * per_group;

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, 2);
    q.block(0, 0, per_group, 1).setOnes();
    q.block(per_group, 1, per_group, 1).setOnes();
    const CovariateMatrix covariates(q, {"group1", "group2"});
    const Dag truth(p);

    TrueParams params = empty_params(p, 2);
    for (NodeId i = 0; i < p; ++i) draw_params(seed, i, 1.0, 0.5, 1.0, 1.0, 2, 0, params);

    std::vector<SimOutput> out;
    out.reserve(static_cast<std::size_t>(replicates));
    for (int r = 0; r < replicates; ++r) {
        out.push_back({Dataset(sample_data(seed, r, truth, q, params), names("X", p)), covariates,
                       truth, params});
    }
    return out;
}

std::vector<SimOutput> gen_example2(std::uint64_t seed, int replicates) {
    if (replicates < 1) throw ConstraintError("replicates must be at least 1");
    constexpr int p = 20;
    const Eigen::MatrixXd q = example2_covariates();
    const CovariateMatrix covariates(q, {"q1", "q2", "q3"});
    const Dag truth(p, {{0, 18}, {1, 18}, {18, 19}});

    TrueParams params = empty_params(p, 3);
    for (NodeId i = 0; i < p; ++i) {
        const std::size_t k = truth.parents(i).size();
        draw_params(seed, i, (2.0 + static_cast<double>(k)) / 2.0, 0.5, 1.0, 1.0, 3, k, params);
    }

    std::vector<SimOutput> out;
    out.reserve(static_cast<std::size_t>(replicates));
    for (int r = 0; r < replicates; ++r) {
        out.push_back({Dataset(sample_data(seed, r, truth, q, params), names("X", p)), covariates,
                       truth, params});
    }
    return out;
}

SimOutput gen_generic(const Dag& truth, const CovariateMatrix& q, const Hyperparams& hp,
                      Eigen::Index n, std::uint64_t seed) {
    hp.validate();
    if (q.n() != n) {
        throw ConstraintError("covariate matrix has " + std::to_string(q.n()) +
                              " rows but n=" + std::to_string(n));
    }
    TrueParams params = empty_params(truth.p(), q.m());
    for (NodeId i = 0; i < truth.p(); ++i) {
        const std::size_t k = truth.parents(i).size();
        draw_params(seed, i, (hp.delta + static_cast<double>(k)) / 2.0, hp.tau / 2.0, hp.upsilon,
                    hp.tau, q.m(), k, params);
    }
    return {Dataset(sample_data(seed, 0, truth, q.values(), params), names("X", truth.p())), q,
            truth, params};
}

}  // namespace covnet
