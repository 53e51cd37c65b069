#pragma once

// Discrete distributions over labeled alphabets and the noisy-channel model
// P_out|in = I + eta * T.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ufs/random.hpp"

namespace ufs {

using Labels = std::vector<std::string>;

/// "0", "1", ..., "n-1".
Labels index_labels(std::size_t n);

inline constexpr double kMassTolerance = 1e-12;

class Pmf {
public:
    /// Throws InvalidArgument unless probs is nonnegative, sums to 1 within
    /// kMassTolerance and labels are unique and match the length.
    Pmf(Labels labels, Eigen::VectorXd probs);
    explicit Pmf(Eigen::VectorXd probs);

    static Pmf uniform(std::size_t n);
    static Pmf uniform(Labels labels);

    const Labels& labels() const noexcept { return labels_; }
    const Eigen::VectorXd& probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(probs_.size()); }
    double operator[](std::size_t i) const { return probs_(static_cast<Eigen::Index>(i)); }

    bool strictly_positive() const noexcept;
    /// Throws InvalidArgument naming the first zero-probability symbol.
    void require_strictly_positive(std::string_view what) const;

    /// Additive smoothing: (p + alpha) / (1 + n * alpha). alpha = 0 returns a copy.
    Pmf smoothed(double alpha) const;

    Eigen::VectorXd sqrt_probs() const { return probs_.cwiseSqrt(); }

private:
    Labels labels_;
    Eigen::VectorXd probs_;
};

/// Joint distribution stored rows-over-Y, columns-over-X: probs(j, i) = P(x_i, y_j).
class JointPmf {
public:
    JointPmf(Labels x_labels, Labels y_labels, Eigen::MatrixXd probs);
    explicit JointPmf(Eigen::MatrixXd probs);

    const Labels& x_labels() const noexcept { return x_marginal_.labels(); }
    const Labels& y_labels() const noexcept { return y_marginal_.labels(); }
    const Eigen::MatrixXd& probs() const noexcept { return probs_; }
    std::size_t x_size() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
    std::size_t y_size() const noexcept { return static_cast<std::size_t>(probs_.rows()); }

    const Pmf& x_marginal() const noexcept { return x_marginal_; }
    const Pmf& y_marginal() const noexcept { return y_marginal_; }

    /// Conditional P_{Y|X} as a |Y|x|X| column-stochastic matrix. Requires P_X > 0.
    Eigen::MatrixXd y_given_x() const;
    /// Conditional P_{X|Y} as a |X|x|Y| column-stochastic matrix. Requires P_Y > 0.
    Eigen::MatrixXd x_given_y() const;

    JointPmf smoothed(double alpha) const;

    static JointPmf product(const Pmf& px, const Pmf& py);

private:
    Eigen::MatrixXd probs_;
    Pmf x_marginal_;
    Pmf y_marginal_;
};

/// Square column-stochastic transition matrix P = I + eta * T, columns
/// indexed by the input symbol. Every column of T sums to zero.
class Channel {
public:
    /// Throws FeasibilityError ("eta exceeds feasibility bound") when some
    /// entry of I + eta*T leaves [0, 1]; max_feasible() reports the bound.
    static Channel make(Eigen::MatrixXd perturbation, double eta, Labels labels = {});

    /// Decomposes an arbitrary square column-stochastic matrix with
    /// eta = max_ij |P - I|_ij and T = (P - I) / eta (T = 0 when P = I).
    static Channel from_matrix(const Eigen::MatrixXd& transition, Labels labels = {});

    static Channel identity(Labels labels);

    /// Largest eta >= 0 for which I + eta*T stays entrywise in [0, 1]; +inf for T = 0.
    static double max_feasible_eta(const Eigen::MatrixXd& perturbation);

    /// q-ary symmetric perturbation: -1 on the diagonal, 1/(n-1) elsewhere.
    static Eigen::MatrixXd symmetric_perturbation(std::size_t n);

    const Labels& labels() const noexcept { return labels_; }
    const Eigen::MatrixXd& matrix() const noexcept { return transition_; }
    const Eigen::MatrixXd& perturbation() const noexcept { return perturbation_; }
    double eta() const noexcept { return eta_; }
    std::size_t size() const noexcept { return labels_.size(); }

    /// Output distribution for a given input distribution.
    Pmf apply(const Pmf& input) const;

private:
    Channel(Labels labels, Eigen::MatrixXd perturbation, double eta, Eigen::MatrixXd transition);

    Labels labels_;
    Eigen::MatrixXd perturbation_;
    double eta_ = 0.0;
    Eigen::MatrixXd transition_;
};

using SamplePair = std::pair<std::string, std::string>;

/// Empirical joint from (x, y) pairs. Alphabets are either declared or
/// inferred in first-appearance order. Unknown labels are rejected with the
/// offending record index.
JointPmf joint_from_samples(std::span<const SamplePair> pairs,
                            std::optional<Labels> x_alphabet = std::nullopt,
                            std::optional<Labels> y_alphabet = std::nullopt);

/// i.i.d. draws from a joint, for simulation and ingestion tests.
std::vector<SamplePair> draw_samples(const JointPmf& joint, std::size_t count, Rng& rng);

/// P_{X^,Y^} = P_{Y^|Y} * P_{XY} * P_{X^|X}^T (rows over Y, columns over X).
JointPmf apply_channels(const JointPmf& joint, const Channel& chan_x, const Channel& chan_y);

/// Bayes reversal P_{X|X^} = D_X P_{X^|X}^T D_{X^}^{-1}; column-stochastic,
/// rows over X, columns over X^.
Eigen::MatrixXd reverse_channel(const Channel& chan, const Pmf& input);

/// max_ij |A_ij|, the norm used whenever an O(eta) claim is measured.
inline double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace ufs
