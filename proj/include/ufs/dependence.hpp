#pragma once

// Canonical dependence matrix of a joint distribution, its SVD, and the
// SVD-based feature selection rule.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "ufs/geometry.hpp"
#include "ufs/model.hpp"

namespace ufs {

/// Singular values closer than this are treated as one repeated value.
inline constexpr double kDegenerateTolerance = 1e-9;
/// Singular values at or below this are treated as zero.
inline constexpr double kZeroSigma = 1e-12;

using IndexGroups = std::vector<std::vector<std::size_t>>;

/// Btilde(j, i) = (P(x_i, y_j) - P(x_i) P(y_j)) / sqrt(P(x_i) P(y_j)), with
/// an eager thin SVD over K = min(|X|, |Y|) directions.
///
/// Directions with zero singular value are replaced by a deterministic
/// orthonormal basis of the null space that ends with the trivial pair
/// (sqrt(P_Y), sqrt(P_X)); every selectable feature direction is therefore
/// orthogonal to the square-root marginals.
class CdmMatrix {
public:
    explicit CdmMatrix(const JointPmf& joint);

    const Eigen::MatrixXd& matrix() const noexcept { return b_; }
    const Eigen::MatrixXd& left_vectors() const noexcept { return u_; }
    const Eigen::VectorXd& singular_values() const noexcept { return sigma_; }
    const Eigen::MatrixXd& right_vectors() const noexcept { return v_; }
    const Pmf& x_marginal() const noexcept { return px_; }
    const Pmf& y_marginal() const noexcept { return py_; }
    /// K = min(|X|, |Y|).
    std::size_t rank_bound() const noexcept { return static_cast<std::size_t>(sigma_.size()); }

    /// Maximal runs of (nearly) equal singular values of length >= 2 among
    /// the first `count` indices, extended past `count` when a run straddles it.
    IndexGroups degenerate_groups(std::size_t count) const;

private:
    Pmf px_;
    Pmf py_;
    Eigen::MatrixXd b_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd sigma_;
    Eigen::MatrixXd v_;
};

CdmMatrix canonical_dependence_matrix(const JointPmf& joint);

/// B(j, i) = P(x_i, x^_j) / sqrt(P(x_i) P(x^_j)) = D_out^{-1/2} P D_in^{1/2}
/// for a channel driven by `input`. Its top singular value is 1, attained
/// by the pair (sqrt(P_out), sqrt(P_in)).
class UncenteredB {
public:
    UncenteredB(const Channel& chan, const Pmf& input);

    const Eigen::MatrixXd& matrix() const noexcept { return b_; }
    const Eigen::VectorXd& singular_values() const noexcept { return sigma_; }
    const Pmf& input() const noexcept { return input_; }
    const Pmf& output() const noexcept { return output_; }

    /// sigma_max^2 - sigma_min^2.
    double spectral_range() const;

private:
    Pmf input_;
    Pmf output_;
    Eigen::MatrixXd b_;
    Eigen::VectorXd sigma_;
};

UncenteredB uncentered_b(const Channel& chan, const Pmf& input);

struct FeatureSelection {
    FeatureSet f;  ///< over X, from right singular vectors
    FeatureSet g;  ///< over Y, from left singular vectors
    Eigen::VectorXd sigma;  ///< the k selected singular values
    /// Runs of repeated singular values touching the selection; the returned
    /// basis inside each run is arbitrary and only the subspace is meaningful.
    IndexGroups degenerate;
    /// Selected indices whose singular value is zero.
    std::vector<std::size_t> zero_sigma;
};

/// f_i = v_i / sqrt(P_X), g_i = u_i / sqrt(P_Y) for the top-k singular pairs,
/// 1 <= k <= K - 1.
FeatureSelection select_features(const CdmMatrix& cdm, std::size_t k);
FeatureSelection select_features(const JointPmf& joint, std::size_t k);

/// All K singular values of the canonical dependence matrix (the trailing
/// one is always zero).
Eigen::VectorXd hgr_profile(const JointPmf& joint);

/// Orthogonal projector onto the column span of an orthonormal basis.
inline Eigen::MatrixXd subspace_projector(const Eigen::MatrixXd& basis) { return basis * basis.transpose(); }

}  // namespace ufs
