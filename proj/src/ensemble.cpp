#include "ufs/ensemble.hpp"

#include <cmath>

#include "ufs/dependence.hpp"
#include "ufs/error.hpp"

namespace ufs {

namespace {

constexpr std::uint64_t kConfigurationStream = 0xC0F;

Configuration with_conditionals(const Configuration& like, Pmf base, Eigen::MatrixXd cond) {
    return Configuration(std::move(base), like.prior(), std::move(cond), like.epsilon(), like.unconstrained());
}

Eigen::MatrixXd phi_of(const Eigen::MatrixXd& cond, const Pmf& base, double epsilon) {
    const Eigen::VectorXd& p = base.probs();
    return (epsilon * p.cwiseSqrt()).cwiseInverse().asDiagonal() * (cond.colwise() - p);
}

}  // namespace

void AttributeEnsembleSpec::validate() const {
    base.require_strictly_positive("attribute ensemble base");
    prior.require_strictly_positive("attribute ensemble prior");
    if (!(epsilon > 0.0)) throw InvalidArgument("attribute ensemble: epsilon must be positive");
    if (!(anisotropy >= 0.0)) throw InvalidArgument("attribute ensemble: anisotropy must be nonnegative");
    if (!(rho > 0.0 && rho <= 1.0)) throw InvalidArgument("attribute ensemble: rho must lie in (0, 1]");
    if (base.size() < 2) throw InvalidArgument("attribute ensemble: base alphabet needs at least two symbols");
    if (prior.size() < 2) throw InvalidArgument("attribute ensemble: attribute alphabet needs at least two symbols");
}

SampledConfiguration sample_configuration(const AttributeEnsembleSpec& spec, Rng& rng) {
    spec.validate();
    const auto nz = static_cast<Eigen::Index>(spec.base.size());
    const auto nw = static_cast<Eigen::Index>(spec.w_size());
    const Eigen::VectorXd root = spec.base.sqrt_probs();
    const Eigen::VectorXd& prior = spec.prior.probs();
    std::normal_distribution<double> nd;
    for (std::size_t attempt = 0; attempt <= spec.rejection_cap; ++attempt) {
        Eigen::MatrixXd phi(nz, nw);
        for (Eigen::Index j = 0; j < nw; ++j)
            for (Eigen::Index i = 0; i < nz; ++i) phi(i, j) = nd(rng);
        phi.row(0) *= 1.0 + spec.anisotropy;
        phi -= root * (root.transpose() * phi);
        const Eigen::VectorXd mean = phi * prior;
        phi.colwise() -= mean;
        const double largest = phi.colwise().norm().maxCoeff();
        if (!(largest > 0.0)) continue;
        phi *= spec.rho / largest;
        const double feasible = max_feasible_epsilon(spec.base, phi);
        if (spec.epsilon > feasible) continue;
        Configuration config = config_from_information_matrix(spec.base, spec.prior, phi, spec.epsilon);
        return {std::move(config), std::move(phi), attempt};
    }
    throw Error("infeasible", "epsilon infeasible for spec: rejection cap of " + std::to_string(spec.rejection_cap) +
                                  " draws exceeded");
}

SampledConfiguration sample_configuration(const AttributeEnsembleSpec& spec, std::size_t index) {
    Rng rng = make_rng(spec.seed, kConfigurationStream, index);
    return sample_configuration(spec, rng);
}

MatrixEnsemble information_ensemble(const AttributeEnsembleSpec& spec) {
    spec.validate();
    return MatrixEnsemble(
        static_cast<Eigen::Index>(spec.base.size()), static_cast<Eigen::Index>(spec.w_size()),
        [spec](Rng& rng) -> Eigen::MatrixXd { return sample_configuration(spec, rng).phi; }, spec.seed);
}

Configuration push_through_channel(const Configuration& config, const Channel& chan) {
    if (chan.labels() != config.base().labels())
        throw InvalidArgument("push_through_channel: channel alphabet does not match the configuration base");
    Pmf out_base = chan.apply(config.base());
    out_base.require_strictly_positive("push_through_channel output base");
    Eigen::MatrixXd cond = chan.matrix() * config.conditionals();

    const UncenteredB b(chan, config.base());
    const Eigen::MatrixXd via_b = b.matrix() * information_matrix(config).phi();
    const Eigen::MatrixXd via_p = phi_of(cond, out_base, config.epsilon());
    if (max_abs(via_b - via_p) > 1e-12)
        throw Error("internal", "push_through_channel: B*Phi and P-path information matrices disagree");
    return with_conditionals(config, std::move(out_base), std::move(cond));
}

namespace {

MarkovPushResult finish_push(const Configuration& config_in, const Pmf& out_base, Eigen::MatrixXd exact_cond,
                             const JointPmf& approx_joint, const Configuration& approx_config) {
    Configuration exact = with_conditionals(config_in, out_base, std::move(exact_cond));
    Eigen::MatrixXd exact_phi = information_matrix(exact).phi();
    const CdmMatrix cdm(approx_joint);
    Eigen::MatrixXd approx = cdm.matrix() * information_matrix(approx_config).phi();
    Eigen::MatrixXd residual = exact_phi - approx;
    const double norm = max_abs(residual);
    return {approx_config, std::move(exact), std::move(exact_phi), std::move(approx), std::move(residual), norm};
}

}  // namespace

MarkovPushResult markov_push(const Configuration& config, const JointPmf& joint) {
    if (config.base().labels() != joint.x_labels() || max_abs(config.base().probs() - joint.x_marginal().probs()) > 1e-10)
        throw InvalidArgument("markov_push: configuration base does not match the joint's x-marginal");
    Eigen::MatrixXd cond = joint.y_given_x() * config.conditionals();
    return finish_push(config, joint.y_marginal(), std::move(cond), joint, config);
}

MarkovPushResult markov_push(const Configuration& config, const JointPmf& clean, const Channel& chan_x,
                             const Channel& chan_y) {
    if (config.base().labels() != clean.x_labels() || max_abs(config.base().probs() - clean.x_marginal().probs()) > 1e-10)
        throw InvalidArgument("markov_push: configuration base does not match the clean joint's x-marginal");
    const JointPmf noisy = apply_channels(clean, chan_x, chan_y);
    Eigen::MatrixXd cond = chan_y.matrix() * clean.y_given_x() * config.conditionals();
    const Configuration observed = push_through_channel(config, chan_x);
    return finish_push(config, noisy.y_marginal(), std::move(cond), noisy, observed);
}

JointPmf transposed(const JointPmf& joint) {
    return JointPmf(joint.y_labels(), joint.x_labels(), joint.probs().transpose());
}

}  // namespace ufs
