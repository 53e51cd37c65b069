#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "ufs/model.hpp"
#include "ufs/random.hpp"

namespace ufs::testing {

/// Strictly positive joint with entries drawn uniformly from [0.05, 1) and normalized.
inline JointPmf random_joint(std::size_t nx, std::size_t ny, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x7E57, 0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(ny, nx);
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = u(rng);
    return JointPmf(p / p.sum());
}

inline Pmf random_pmf(std::size_t n, std::uint64_t seed, double floor = 0.05) {
    Rng rng = make_rng(seed, 0x7E58, 0);
    std::uniform_real_distribution<double> u(floor, 1.0);
    Eigen::VectorXd p(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
    return Pmf(p / p.sum());
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x7E59, 0);
    std::normal_distribution<double> n;
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = n(rng);
    return a;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, seed));
    return qr.householderQ();
}

/// The canonical dependence matrix written straight from its entrywise formula.
inline Eigen::MatrixXd cdm_by_formula(const JointPmf& joint) {
    const Eigen::VectorXd& px = joint.x_marginal().probs();
    const Eigen::VectorXd& py = joint.y_marginal().probs();
    Eigen::MatrixXd b(joint.y_size(), joint.x_size());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < b.cols(); ++i)
            b(j, i) = (joint.probs()(j, i) - px(i) * py(j)) / std::sqrt(px(i) * py(j));
    return b;
}

/// Least-squares slope of log(y) on log(x).
template <class X, class Y>
double loglog_slope(const X& xs, const Y& ys) {
    double mx = 0, my = 0;
    const auto n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += std::log(xs[i]) / n;
        my += std::log(ys[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
        sxx += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
    }
    return sxy / sxx;
}

}  // namespace ufs::testing
