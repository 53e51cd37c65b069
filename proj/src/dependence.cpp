#include "ufs/dependence.hpp"

#include <algorithm>
#include <cmath>

#include "ufs/error.hpp"
#include "ufs/svd.hpp"

namespace ufs {

namespace {

// Columns [nonzero | completion... | trivial], K in total.
Eigen::MatrixXd null_completed(const Eigen::MatrixXd& nonzero, const Eigen::VectorXd& trivial, Eigen::Index k_total) {
    const Eigen::Index dim = trivial.size();
    Eigen::MatrixXd seed(dim, nonzero.cols() + 1);
    seed << nonzero, trivial;
    const Eigen::MatrixXd full = complete_orthonormal_basis(seed, dim, k_total);
    Eigen::MatrixXd out(dim, k_total);
    const Eigen::Index r0 = nonzero.cols();
    out.leftCols(r0) = nonzero;
    const Eigen::Index extra = k_total - r0 - 1;
    if (extra > 0) out.middleCols(r0, extra) = full.rightCols(extra);
    out.col(k_total - 1) = trivial;
    return out;
}

}  // namespace

CdmMatrix::CdmMatrix(const JointPmf& joint) : px_(joint.x_marginal()), py_(joint.y_marginal()) {
    px_.require_strictly_positive("canonical dependence matrix: x-marginal");
    py_.require_strictly_positive("canonical dependence matrix: y-marginal");
    const Eigen::VectorXd& p_x = px_.probs();
    const Eigen::VectorXd& p_y = py_.probs();
    const Eigen::MatrixXd centered = joint.probs() - p_y * p_x.transpose();
    b_ = p_y.cwiseSqrt().cwiseInverse().asDiagonal() * centered * p_x.cwiseSqrt().cwiseInverse().asDiagonal();

    const Svd svd = jacobi_svd(b_);
    if (!svd.converged) throw Error("svd", "canonical dependence matrix: Jacobi SVD did not converge");
    const Eigen::Index k_total = svd.sigma.size();
    Eigen::Index r0 = 0;
    while (r0 < k_total && svd.sigma(r0) > kZeroSigma) ++r0;
    r0 = std::min(r0, k_total - 1);  // the trivial direction is always null

    sigma_ = Eigen::VectorXd::Zero(k_total);
    sigma_.head(r0) = svd.sigma.head(r0);
    v_ = null_completed(svd.v.leftCols(r0), p_x.cwiseSqrt(), k_total);
    u_ = null_completed(svd.u.leftCols(r0), p_y.cwiseSqrt(), k_total);
}

IndexGroups CdmMatrix::degenerate_groups(std::size_t count) const {
    IndexGroups groups;
    const auto n = static_cast<std::size_t>(sigma_.size());
    std::size_t i = 0;
    while (i < std::min(count, n)) {
        std::size_t j = i + 1;
        while (j < n && std::abs(sigma_(static_cast<Eigen::Index>(j)) - sigma_(static_cast<Eigen::Index>(j - 1))) <=
                            kDegenerateTolerance)
            ++j;
        if (j - i >= 2) {
            std::vector<std::size_t> g;
            for (std::size_t t = i; t < j; ++t) g.push_back(t);
            groups.push_back(std::move(g));
        }
        i = j;
    }
    return groups;
}

CdmMatrix canonical_dependence_matrix(const JointPmf& joint) { return CdmMatrix(joint); }

// ---------------------------------------------------------------------------

UncenteredB::UncenteredB(const Channel& chan, const Pmf& input) : input_(input), output_(chan.apply(input)) {
    input_.require_strictly_positive("uncentered B input");
    output_.require_strictly_positive("uncentered B output");
    b_ = output_.probs().cwiseSqrt().cwiseInverse().asDiagonal() * chan.matrix() *
         input_.probs().cwiseSqrt().asDiagonal();
    const Svd svd = jacobi_svd(b_);
    sigma_ = svd.sigma;
}

double UncenteredB::spectral_range() const {
    const double top = sigma_(0);
    const double bottom = sigma_(sigma_.size() - 1);
    return top * top - bottom * bottom;
}

UncenteredB uncentered_b(const Channel& chan, const Pmf& input) { return UncenteredB(chan, input); }

// ---------------------------------------------------------------------------

FeatureSelection select_features(const CdmMatrix& cdm, std::size_t k) {
    const std::size_t k_max = cdm.rank_bound() - 1;
    if (k < 1 || k > k_max)
        throw InvalidArgument("select_features: k = " + std::to_string(k) + " outside [1, " + std::to_string(k_max) + "]");
    const auto kk = static_cast<Eigen::Index>(k);
    FeatureSelection out{
        FeatureSet::from_feature_vectors(cdm.right_vectors().leftCols(kk), cdm.x_marginal()),
        FeatureSet::from_feature_vectors(cdm.left_vectors().leftCols(kk), cdm.y_marginal()),
        cdm.singular_values().head(kk),
        cdm.degenerate_groups(k),
        {},
    };
    for (std::size_t i = 0; i < k; ++i) {
        if (out.sigma(static_cast<Eigen::Index>(i)) <= kZeroSigma) out.zero_sigma.push_back(i);
    }
    return out;
}

FeatureSelection select_features(const JointPmf& joint, std::size_t k) {
    return select_features(CdmMatrix(joint), k);
}

Eigen::VectorXd hgr_profile(const JointPmf& joint) { return CdmMatrix(joint).singular_values(); }

}  // namespace ufs
