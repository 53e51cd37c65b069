#include "ufs/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ufs/error.hpp"
#include "ufs/svd.hpp"

namespace ufs {

double chi2_divergence(const Pmf& p, const Pmf& ref) {
    if (p.labels() != ref.labels()) throw InvalidArgument("chi2_divergence: alphabet mismatch");
    ref.require_strictly_positive("chi2_divergence reference");
    return ((p.probs() - ref.probs()).array().square() / ref.probs().array()).sum();
}

// ---------------------------------------------------------------------------

Configuration::Configuration(Pmf base, Pmf prior, Eigen::MatrixXd conditionals, double epsilon, bool unconstrained)
    : base_(std::move(base)),
      prior_(std::move(prior)),
      conditionals_(std::move(conditionals)),
      epsilon_(epsilon),
      unconstrained_(unconstrained) {
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw InvalidArgument("configuration: epsilon must be positive");
    base_.require_strictly_positive("configuration base");
    if (conditionals_.rows() != static_cast<Eigen::Index>(base_.size()) ||
        conditionals_.cols() != static_cast<Eigen::Index>(prior_.size()))
        throw InvalidArgument("configuration: conditionals must be |Z| x |W|");
    const double radius2 = epsilon_ * epsilon_;
    for (std::size_t w = 0; w < prior_.size(); ++w) {
        const Pmf col = conditional(w);  // validates stochasticity
        const double chi2 = chi2_divergence(col, base_);
        if (chi2 > radius2 * (1.0 + 1e-9) + 1e-15) {
            std::ostringstream os;
            os.precision(17);
            os << "configuration: conditional for '" << prior_.labels()[w] << "' has chi-square " << chi2
               << " outside the epsilon-neighborhood (epsilon^2 = " << radius2 << ")";
            throw InvalidArgument(os.str());
        }
    }
    if (!unconstrained_) {
        const Eigen::VectorXd mix = conditionals_ * prior_.probs();
        if (max_abs(mix - base_.probs()) > 1e-10)
            throw InvalidArgument("configuration: prior mixture of conditionals does not reproduce the base");
    }
}

Pmf Configuration::conditional(std::size_t w) const {
    return Pmf(base_.labels(), conditionals_.col(static_cast<Eigen::Index>(w)));
}

InformationMatrix::InformationMatrix(Eigen::MatrixXd phi, double epsilon, const Pmf& base)
    : phi_(std::move(phi)), epsilon_(epsilon) {
    if (phi_.rows() != static_cast<Eigen::Index>(base.size()))
        throw InvalidArgument("information matrix: row count must match the base alphabet");
    const Eigen::VectorXd root = base.sqrt_probs();
    for (Eigen::Index j = 0; j < phi_.cols(); ++j) {
        if (phi_.col(j).norm() > 1.0 + 1e-10)
            throw InvalidArgument("information matrix: column " + std::to_string(j) + " has norm above 1");
        if (std::abs(root.dot(phi_.col(j))) > 1e-10)
            throw InvalidArgument("information matrix: column " + std::to_string(j) + " is not orthogonal to sqrt(P)");
    }
}

InformationMatrix information_matrix(const Configuration& config) {
    const Eigen::VectorXd& p = config.base().probs();
    const Eigen::VectorXd scale = (config.epsilon() * p.cwiseSqrt()).cwiseInverse();
    Eigen::MatrixXd phi = scale.asDiagonal() * (config.conditionals().colwise() - p);
    return InformationMatrix(std::move(phi), config.epsilon(), config.base());
}

double max_feasible_epsilon(const Pmf& base, const Eigen::MatrixXd& phi) {
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        for (Eigen::Index i = 0; i < phi.rows(); ++i) {
            if (phi(i, j) < 0.0) bound = std::min(bound, std::sqrt(base[static_cast<std::size_t>(i)]) / -phi(i, j));
        }
    }
    return bound;
}

Configuration config_from_information_matrix(const Pmf& base, const Pmf& prior, const Eigen::MatrixXd& phi,
                                             double epsilon, bool unconstrained) {
    base.require_strictly_positive("configuration base");
    const InformationMatrix checked(phi, epsilon, base);
    const Eigen::VectorXd& p = base.probs();
    Eigen::MatrixXd cond = (epsilon * p.cwiseSqrt()).asDiagonal() * phi;
    cond.colwise() += p;
    if ((cond.array() < 0.0).any()) {
        const double bound = max_feasible_epsilon(base, phi);
        std::ostringstream os;
        os.precision(17);
        os << "epsilon too large for this direction: epsilon = " << epsilon << ", max feasible epsilon = " << bound;
        throw FeasibilityError(os.str(), bound);
    }
    return Configuration(base, prior, std::move(cond), epsilon, unconstrained);
}

// ---------------------------------------------------------------------------

FeatureSet::FeatureSet(Eigen::MatrixXd h, Pmf base) : h_(std::move(h)), base_(std::move(base)) {
    if (h_.rows() != static_cast<Eigen::Index>(base_.size()))
        throw InvalidArgument("feature set: row count must match the base alphabet");
    const Eigen::VectorXd& p = base_.probs();
    const Eigen::VectorXd mean = h_.transpose() * p;
    if (mean.size() > 0 && mean.cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidArgument("feature set: features are not centered under the base");
    const Eigen::MatrixXd gram = h_.transpose() * p.asDiagonal() * h_;
    if (gram.size() > 0 && max_abs(gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())) > 1e-8)
        throw InvalidArgument("feature set: second-moment matrix differs from identity");
}

FeatureSet FeatureSet::from_feature_vectors(const Eigen::MatrixXd& psi, const Pmf& base) {
    base.require_strictly_positive("feature base");
    if (psi.rows() != static_cast<Eigen::Index>(base.size()))
        throw InvalidArgument("feature vectors: row count must match the base alphabet");
    return FeatureSet(base.sqrt_probs().cwiseInverse().asDiagonal() * psi, base);
}

FeatureSet normalize_features(const Eigen::MatrixXd& raw, const Pmf& base) {
    base.require_strictly_positive("feature base");
    if (raw.rows() != static_cast<Eigen::Index>(base.size()))
        throw InvalidArgument("normalize_features: row count must match the base alphabet");
    const Eigen::VectorXd& p = base.probs();
    auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a.array() * b.array() * p.array()).sum(); };

    Eigen::MatrixXd h(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        Eigen::VectorXd col = raw.col(c);
        const double raw_norm = std::sqrt(inner(col, col));
        // Two passes against the constant function and the accepted columns.
        for (int pass = 0; pass < 2; ++pass) {
            col.array() -= p.dot(col);
            for (Eigen::Index j = 0; j < c; ++j) col -= inner(h.col(j), col) * h.col(j);
        }
        const double norm = std::sqrt(inner(col, col));
        if (!(norm > 1e-10 * raw_norm) || raw_norm == 0.0)
            throw InvalidArgument("normalize_features: column " + std::to_string(c) +
                                  " is linearly dependent on the constant function and earlier columns");
        h.col(c) = col / norm;
        apply_sign_convention(h.col(c));
    }
    return FeatureSet(std::move(h), base);
}

Eigen::MatrixXd feature_vectors(const FeatureSet& fs) {
    return fs.base().sqrt_probs().asDiagonal() * fs.values();
}

}  // namespace ufs
