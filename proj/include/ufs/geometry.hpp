#pragma once

// Local information geometry around a strictly positive base distribution:
// epsilon-neighborhoods, attribute configurations, information matrices and
// normalized feature functions.

#include <Eigen/Dense>

#include <cstddef>

#include "ufs/model.hpp"

namespace ufs {

/// sum_z (p(z) - ref(z))^2 / ref(z).
double chi2_divergence(const Pmf& p, const Pmf& ref);

/// An epsilon-attribute W of Z: prior P_W and column-stochastic
/// conditionals P_{Z|W} (|Z| x |W|), each column within the chi-square ball
/// of radius epsilon around the base. Unless `unconstrained`, the prior
/// mixture of the conditionals must reproduce the base within 1e-10.
class Configuration {
public:
    Configuration(Pmf base, Pmf prior, Eigen::MatrixXd conditionals, double epsilon, bool unconstrained = false);

    const Pmf& base() const noexcept { return base_; }
    const Pmf& prior() const noexcept { return prior_; }
    const Labels& w_labels() const noexcept { return prior_.labels(); }
    const Eigen::MatrixXd& conditionals() const noexcept { return conditionals_; }
    double epsilon() const noexcept { return epsilon_; }
    bool unconstrained() const noexcept { return unconstrained_; }
    std::size_t z_size() const noexcept { return base_.size(); }
    std::size_t w_size() const noexcept { return prior_.size(); }

    Pmf conditional(std::size_t w) const;

private:
    Pmf base_;
    Pmf prior_;
    Eigen::MatrixXd conditionals_;
    double epsilon_;
    bool unconstrained_;
};

/// Phi(i, j) = (P_{Z|W}(z_i|w_j) - P_Z(z_i)) / (epsilon * sqrt(P_Z(z_i))).
/// Every column has norm <= 1 and is orthogonal to sqrt(P_Z).
class InformationMatrix {
public:
    InformationMatrix(Eigen::MatrixXd phi, double epsilon, const Pmf& base);

    const Eigen::MatrixXd& phi() const noexcept { return phi_; }
    double epsilon() const noexcept { return epsilon_; }

private:
    Eigen::MatrixXd phi_;
    double epsilon_;
};

InformationMatrix information_matrix(const Configuration& config);

/// Inverse map: conditionals = base + epsilon * sqrt(base) .* phi. Throws
/// FeasibilityError ("epsilon too large for this direction") with the
/// largest epsilon that keeps every conditional nonnegative.
Configuration config_from_information_matrix(const Pmf& base, const Pmf& prior, const Eigen::MatrixXd& phi,
                                             double epsilon, bool unconstrained = false);

/// Largest epsilon with base + epsilon * sqrt(base) .* phi >= 0 entrywise.
double max_feasible_epsilon(const Pmf& base, const Eigen::MatrixXd& phi);

/// k normalized feature functions on the alphabet of `base`: columns of h
/// have zero mean and identity second moment under base.
class FeatureSet {
public:
    FeatureSet(Eigen::MatrixXd h, Pmf base);

    /// h = D^{-1/2} psi for orthonormal feature vectors psi orthogonal to sqrt(base).
    static FeatureSet from_feature_vectors(const Eigen::MatrixXd& psi, const Pmf& base);

    const Eigen::MatrixXd& values() const noexcept { return h_; }
    const Pmf& base() const noexcept { return base_; }
    std::size_t k() const noexcept { return static_cast<std::size_t>(h_.cols()); }

private:
    Eigen::MatrixXd h_;
    Pmf base_;
};

/// Centers and whitens raw feature columns under `base` by P-weighted
/// Gram-Schmidt in input order. A column whose residual P-norm falls below
/// 1e-10 times its raw P-norm is rejected with its index. Each output column
/// follows the sign convention of apply_sign_convention.
FeatureSet normalize_features(const Eigen::MatrixXd& raw, const Pmf& base);

/// psi_i(z) = sqrt(P(z)) h_i(z).
Eigen::MatrixXd feature_vectors(const FeatureSet& fs);

}  // namespace ufs
