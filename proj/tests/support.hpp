#ifndef COVNET_TEST_SUPPORT_HPP
#define COVNET_TEST_SUPPORT_HPP

#include "covnet/model.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace support {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    std::normal_distribution<double> z(0.0, sd);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = z(rng);
    }
    return out;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// First column is an intercept when m > 1.
inline covnet::CovariateMatrix random_covariates(Rng& rng, Eigen::Index n, Eigen::Index m) {
    Eigen::MatrixXd q = gaussian(rng, n, m);
    if (m > 1) q.col(0).setOnes();
    return covnet::CovariateMatrix(q);
}

inline covnet::Dag random_dag(Rng& rng, int p, double edge_prob, int max_parents = 1 << 20) {
    std::vector<int> order(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution coin(edge_prob);
    std::vector<covnet::Edge> edges;
    std::vector<int> indeg(static_cast<std::size_t>(p), 0);
    for (int a = 0; a < p; ++a) {
        for (int b = a + 1; b < p; ++b) {
            const int to = order[static_cast<std::size_t>(b)];
            if (coin(rng) && indeg[static_cast<std::size_t>(to)] < max_parents) {
                edges.push_back({order[static_cast<std::size_t>(a)], to});
                ++indeg[static_cast<std::size_t>(to)];
            }
        }
    }
    return covnet::Dag(p, edges);
}

// Columns of `values` selected by `ids`.
inline Eigen::MatrixXd columns(const Eigen::MatrixXd& values, const std::vector<int>& ids) {
    Eigen::MatrixXd out(values.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = values.col(ids[i]);
    }
    return out;
}

// Marginal covariance of y given psi = 1: I + X X'/tau (+ Q Q'/upsilon).
inline Eigen::MatrixXd marginal_cov(const Eigen::MatrixXd& x, const Eigen::MatrixXd* q, double tau,
                                    double upsilon, Eigen::Index n) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    if (x.cols() > 0) v += x * x.transpose() / tau;
    if (q) v += *q * q->transpose() / upsilon;
    return v;
}

// log of  integral_0^inf N(y; 0, psi V) InvGamma(psi; a0, tau/2) dpsi, by quadrature over
// u = 1/psi.
inline double log_marginal_quadrature(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd* q, double tau, double delta,
                                      double upsilon = 1.0) {
    const auto n = y.size();
    const double nd = static_cast<double>(n);
    const Eigen::MatrixXd v = marginal_cov(x, q, tau, upsilon, n);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double s = y.dot(ldlt.solve(y));
    const double a0 = 0.5 * (delta + static_cast<double>(x.cols()));
    const double b0 = 0.5 * tau;
    // log of integrand in u, without the u-free constant
    const auto h = [&](double u) {
        return (a0 - 1.0 + 0.5 * nd) * std::log(u) - u * (b0 + 0.5 * s);
    };
    const double u_star = std::max((a0 - 1.0 + 0.5 * nd) / (b0 + 0.5 * s), 1e-300);
    const double h_star = h(u_star);
    boost::math::quadrature::exp_sinh<double> integrator;
    const double integral = integrator.integrate(
        [&](double u) { return u <= 0.0 ? 0.0 : std::exp(h(u) - h_star); }, 0.0,
        std::numeric_limits<double>::infinity());
    const double constant = -0.5 * nd * std::log(2.0 * std::numbers::pi) - 0.5 * logdet +
                            a0 * std::log(b0) - std::lgamma(a0);
    return constant + h_star + std::log(integral);
}

// E[1/psi] and Var[1/psi] under the marginal posterior of psi, by quadrature.
struct PrecisionMoments {
    double mean = 0.0;
    double variance = 0.0;
};

inline PrecisionMoments precision_moments_quadrature(const Eigen::VectorXd& y,
                                                     const Eigen::MatrixXd& x,
                                                     const Eigen::MatrixXd* q, double tau,
                                                     double delta, double upsilon) {
    const auto n = y.size();
    const Eigen::MatrixXd v = marginal_cov(x, q, tau, upsilon, n);
    const double s = y.dot(v.ldlt().solve(y));
    const double a = 0.5 * (delta + static_cast<double>(x.cols())) - 1.0 + 0.5 * static_cast<double>(n);
    const double r = 0.5 * tau + 0.5 * s;
    const double u_star = a / r;
    const auto w = [&](double u) {
        return u <= 0.0 ? 0.0 : std::exp(a * std::log(u / u_star) - r * (u - u_star));
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    const double inf = std::numeric_limits<double>::infinity();
    const double z0 = integrator.integrate(w, 0.0, inf);
    const double z1 = integrator.integrate([&](double u) { return u * w(u); }, 0.0, inf);
    const double z2 = integrator.integrate([&](double u) { return u * u * w(u); }, 0.0, inf);
    const double mean = z1 / z0;
    return {mean, z2 / z0 - mean * mean};
}

// Self-normalised importance sampling of E[gamma | y] and E[b | y] under the joint model
// y = X gamma + Q b + e, e ~ N(0, psi I), gamma ~ N(0, psi/tau), b ~ N(0, psi/upsilon),
// 1/psi ~ Ga((delta + k)/2, tau/2).
struct McMeans {
    Eigen::VectorXd gamma;
    Eigen::VectorXd b;
};

inline McMeans mc_posterior_means(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& q, double tau, double delta,
                                  double upsilon, long draws, Rng& rng) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = x.cols();
    const Eigen::Index m = q.cols();
    const Eigen::Index d = k + m;
    Eigen::MatrixXd z(n, d);
    z << x, q;
    Eigen::VectorXd prior_prec(d);
    prior_prec << Eigen::VectorXd::Constant(k, tau), Eigen::VectorXd::Constant(m, upsilon);
    const double a0 = 0.5 * (delta + static_cast<double>(k));
    const double b0 = 0.5 * tau;

    // Proposal: centre from a lighter ridge, widened covariance, heavier psi tail.
    Eigen::MatrixXd half = z.transpose() * z;
    half.diagonal() += 0.8 * prior_prec;
    const Eigen::VectorXd centre = half.ldlt().solve(z.transpose() * y);
    Eigen::MatrixXd prec = z.transpose() * z;
    prec.diagonal() += prior_prec;
    const double widen = 1.5;
    const Eigen::MatrixXd cov = widen * prec.inverse();
    const Eigen::LLT<Eigen::MatrixXd> cov_llt(cov);
    const Eigen::MatrixXd chol = cov_llt.matrixL();
    const double log_det_chol = chol.diagonal().array().log().sum();
    const double rss = (y - z * centre).squaredNorm() +
                       (centre.array().square() * prior_prec.array()).sum();
    const double pa = a0 + 0.5 * static_cast<double>(n) - 1.0;
    const double pb = b0 + 0.5 * rss;

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::gamma_distribution<double> prop_prec(pa, 1.0 / pb);

    std::vector<double> logw(static_cast<std::size_t>(draws));
    Eigen::MatrixXd thetas(d, draws);
    Eigen::VectorXd e(d);
    for (long t = 0; t < draws; ++t) {
        const double u = prop_prec(rng);
        const double psi = 1.0 / u;
        for (Eigen::Index i = 0; i < d; ++i) e(i) = stdnorm(rng);
        const double sd = std::sqrt(psi);
        const Eigen::VectorXd theta = centre + sd * (chol * e);
        thetas.col(t) = theta;
        const double lik = -0.5 * static_cast<double>(n) * std::log(psi) -
                           0.5 * (y - z * theta).squaredNorm() / psi;
        const double prior_theta = -0.5 * static_cast<double>(d) * std::log(psi) -
                                   0.5 * (theta.array().square() * prior_prec.array()).sum() / psi;
        // inverse-gamma prior on psi, up to a constant
        const double prior_psi = -(a0 + 1.0) * std::log(psi) - b0 / psi;
        const double prop_theta =
            -static_cast<double>(d) * 0.5 * std::log(psi) - log_det_chol - 0.5 * e.squaredNorm();
        const double prop_psi = -(pa + 1.0) * std::log(psi) - pb / psi;
        logw[static_cast<std::size_t>(t)] = lik + prior_theta + prior_psi - prop_theta - prop_psi;
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    double total = 0.0;
    for (long t = 0; t < draws; ++t) {
        const double w = std::exp(logw[static_cast<std::size_t>(t)] - mx);
        acc += w * thetas.col(t);
        total += w;
    }
    acc /= total;
    return {acc.head(k), acc.tail(m)};
}

inline double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
    return (estimate - reference).norm() / reference.norm();
}

}  // namespace support

#endif  // COVNET_TEST_SUPPORT_HPP
