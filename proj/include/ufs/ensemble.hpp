#pragma once

// Random attribute configurations and their propagation through the noisy
// channels and the X - Y Markov chain.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

#include "ufs/geometry.hpp"
#include "ufs/model.hpp"
#include "ufs/symmetry.hpp"

namespace ufs {

struct AttributeEnsembleSpec {
    Pmf base;
    Pmf prior;                 ///< over the attribute alphabet; strictly positive
    double epsilon = 0.05;
    double anisotropy = 0.0;   ///< s: row 0 of the Gaussian draw is scaled by (1 + s)
    double rho = 1.0;          ///< largest column norm of the information matrix, in (0, 1]
    std::uint64_t seed = 0;
    std::size_t rejection_cap = 1000;

    std::size_t w_size() const noexcept { return prior.size(); }
    void validate() const;
};

struct SampledConfiguration {
    Configuration config;
    Eigen::MatrixXd phi;
    std::size_t rejections = 0;
};

/// Draw: i.i.d. N(0,1) |Z| x |W| matrix; row 0 scaled by (1 + s); columns
/// projected off sqrt(base); prior-weighted column mean removed; matrix
/// rescaled so its largest column norm is rho; mapped to conditionals.
/// Draws with a negative conditional are rejected and redrawn.
SampledConfiguration sample_configuration(const AttributeEnsembleSpec& spec, Rng& rng);
/// Draw number `index` of the spec's seeded stream.
SampledConfiguration sample_configuration(const AttributeEnsembleSpec& spec, std::size_t index);

/// The information-matrix ensemble induced by the spec, for symmetry tools.
MatrixEnsemble information_ensemble(const AttributeEnsembleSpec& spec);

/// Conditionals P_{X^|U} = P_{X^|X} P_{X|U} over the channel output base.
/// Also computed as B * Phi with the uncentered B; the two paths must agree
/// to 1e-12 (max-abs) or an Error is thrown.
Configuration push_through_channel(const Configuration& config, const Channel& chan);

struct MarkovPushResult {
    Configuration observed;    ///< P_{X^|U}, the configuration seen through the X-side channel
    Configuration exact;       ///< P_{Y^|U}
    Eigen::MatrixXd exact_phi;
    Eigen::MatrixXd approx;    ///< Btilde_{X^,Y^} * Phi^{X^|U}
    Eigen::MatrixXd residual;  ///< exact_phi - approx
    double residual_norm = 0.0;  ///< max-abs entry of residual
};

/// Noise-free path: `config` is an attribute of the joint's X alphabet and
/// the exact conditionals come from P_{Y|X} of `joint`.
MarkovPushResult markov_push(const Configuration& config, const JointPmf& joint);

/// Full chain U - X - Y - Y^ with X^ observed through chan_x: `config` is an
/// attribute of the clean X. Exact: P_{Y^|U} = P_{Y^|Y} P_{Y|X} P_{X|U};
/// approximation uses the noisy joint and P_{X^|U}.
MarkovPushResult markov_push(const Configuration& config, const JointPmf& clean, const Channel& chan_x,
                             const Channel& chan_y);

/// Swaps the roles of X and Y.
JointPmf transposed(const JointPmf& joint);

}  // namespace ufs
