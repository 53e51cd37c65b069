#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <vector>

#include "support.hpp"
#include "ufs/ensemble.hpp"
#include "ufs/error.hpp"

using namespace ufs;
using ufs::testing::random_joint;
using ufs::testing::random_pmf;

namespace {

AttributeEnsembleSpec uniform_spec(double epsilon, double s = 0.0, double rho = 1.0, std::uint64_t seed = 1) {
    AttributeEnsembleSpec spec{Pmf::uniform(4), Pmf::uniform(3)};
    spec.epsilon = epsilon;
    spec.anisotropy = s;
    spec.rho = rho;
    spec.seed = seed;
    return spec;
}

Eigen::MatrixXd projector_off(const Eigen::VectorXd& root) {
    const auto n = root.size();
    return Eigen::MatrixXd::Identity(n, n) - root * root.transpose();
}

}  // namespace

TEST_CASE("configuration sampler") {
    SUBCASE("draws satisfy the geometry invariants") {
        AttributeEnsembleSpec spec{random_pmf(5, 3), random_pmf(4, 4)};
        spec.epsilon = 0.05;
        spec.anisotropy = 0.7;
        spec.rho = 0.8;
        for (std::size_t i = 0; i < 50; ++i) {
            const SampledConfiguration d = sample_configuration(spec, i);
            const Eigen::VectorXd root = spec.base.sqrt_probs();
            CHECK((root.transpose() * d.phi).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((d.phi * spec.prior.probs()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(d.phi.colwise().norm().maxCoeff() == doctest::Approx(0.8));
            CHECK(max_abs(information_matrix(d.config).phi() - d.phi) < 1e-12);
            CHECK(max_abs(d.config.conditionals() * spec.prior.probs() - spec.base.probs()) < 1e-12);
            for (std::size_t w = 0; w < spec.w_size(); ++w)
                CHECK(chi2_divergence(d.config.conditional(w), spec.base) <= 0.05 * 0.05 * (1 + 1e-9));
        }
    }
    SUBCASE("draws are reproducible by index") {
        const AttributeEnsembleSpec spec = uniform_spec(0.05);
        CHECK(sample_configuration(spec, 7).phi == sample_configuration(spec, 7).phi);
        CHECK(sample_configuration(spec, 7).phi != sample_configuration(spec, 8).phi);
    }
    SUBCASE("rejections happen only near the feasibility edge") {
        std::size_t small = 0;
        for (std::size_t i = 0; i < 10000; ++i) small += sample_configuration(uniform_spec(0.01), i).rejections;
        CHECK(small == 0);
        std::size_t large = 0;
        for (std::size_t i = 0; i < 200; ++i) {
            const SampledConfiguration d = sample_configuration(uniform_spec(0.9), i);
            large += d.rejections;
            CHECK(d.config.conditionals().minCoeff() >= 0.0);
        }
        CHECK(large > 0);
    }
    SUBCASE("infeasible epsilon exhausts the rejection cap") {
        // Zero-sum columns of unit norm on four symbols always have an entry below -1/6.
        AttributeEnsembleSpec spec = uniform_spec(3.0);
        spec.rejection_cap = 20;
        try {
            sample_configuration(spec, 0);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == "infeasible");
        }
    }
    SUBCASE("invalid specs are rejected") {
        CHECK_THROWS_AS(sample_configuration(uniform_spec(0.05, 0.0, 1.5), 0), InvalidArgument);
        CHECK_THROWS_AS(sample_configuration(uniform_spec(-0.1), 0), InvalidArgument);
        CHECK_THROWS_AS(sample_configuration(uniform_spec(0.05, -1.0), 0), InvalidArgument);
    }
}

TEST_CASE("symmetry of the information ensemble") {
    SUBCASE("isotropic draws factor as S (x) Pi") {
        const AttributeEnsembleSpec spec = uniform_spec(0.05);
        const SecondMomentForm form = second_moment_form(information_ensemble(spec), 40000);
        const Eigen::MatrixXd pi = projector_off(spec.base.sqrt_probs());
        Eigen::MatrixXd s(3, 3);
        for (Eigen::Index j = 0; j < 3; ++j)
            for (Eigen::Index l = 0; l < 3; ++l) s(j, l) = form.matrix().block(4 * j, 4 * l, 4, 4).trace() / 3.0;
        Eigen::MatrixXd kron(12, 12);
        for (Eigen::Index j = 0; j < 3; ++j)
            for (Eigen::Index l = 0; l < 3; ++l) kron.block(4 * j, 4 * l, 4, 4) = s(j, l) * pi;
        CHECK(max_abs(form.matrix() - kron) < 0.01);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        const DeltaEstimate d = delta_from_form(form);
        CHECK(d.range.min.value == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(d.delta == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(0.03));
    }
    SUBCASE("anisotropy increases delta and delta scales with rho^2") {
        const double d0 = delta_estimate(information_ensemble(uniform_spec(0.05, 0.0)), 20000).delta;
        const double d1 = delta_estimate(information_ensemble(uniform_spec(0.05, 0.5)), 20000).delta;
        const double d0r = delta_estimate(information_ensemble(uniform_spec(0.05, 0.0, 0.3)), 20000).delta;
        CHECK(d1 > d0);
        CHECK(d0r == doctest::Approx(0.09 * d0).epsilon(1e-6));
    }
}

TEST_CASE("push through a channel") {
    SUBCASE("binary symmetric channel shrinks phi by 1 - 2 eta") {
        Eigen::MatrixXd cond(2, 2);
        cond << 0.6, 0.4, 0.4, 0.6;
        const Configuration c(Pmf::uniform(2), Pmf::uniform(2), cond, 0.3);
        Eigen::MatrixXd t(2, 2);
        t << -1, 1, 1, -1;
        const Configuration out = push_through_channel(c, Channel::make(t, 0.1));
        CHECK(out.conditionals()(0, 0) == doctest::Approx(0.58));
        CHECK(out.conditionals()(1, 0) == doctest::Approx(0.42));
        CHECK(max_abs(information_matrix(out).phi() - 0.8 * information_matrix(c).phi()) < 1e-14);
    }
    SUBCASE("identity channel is a no-op") {
        const SampledConfiguration d = sample_configuration(uniform_spec(0.05), 3);
        const Configuration out = push_through_channel(d.config, Channel::identity(index_labels(4)));
        CHECK(max_abs(out.conditionals() - d.config.conditionals()) < 1e-15);
    }
    SUBCASE("matches a loop over the channel matrix") {
        AttributeEnsembleSpec spec{random_pmf(3, 8), Pmf::uniform(2)};
        const SampledConfiguration d = sample_configuration(spec, 0);
        const Channel ch = Channel::make(Channel::symmetric_perturbation(3), 0.2);
        const Configuration out = push_through_channel(d.config, ch);
        for (Eigen::Index w = 0; w < 2; ++w)
            for (Eigen::Index j = 0; j < 3; ++j) {
                double v = 0.0;
                for (Eigen::Index i = 0; i < 3; ++i) v += ch.matrix()(j, i) * d.config.conditionals()(i, w);
                CHECK(out.conditionals()(j, w) == doctest::Approx(v).epsilon(1e-14));
            }
        CHECK(max_abs(out.base().probs() - ch.apply(spec.base).probs()) < 1e-15);
    }
    SUBCASE("alphabet mismatch") {
        const SampledConfiguration d = sample_configuration(uniform_spec(0.05), 0);
        CHECK_THROWS_AS(push_through_channel(d.config, Channel::identity(index_labels(3))), InvalidArgument);
    }
}

TEST_CASE("markov push") {
    const JointPmf clean = random_joint(4, 3, 21);
    AttributeEnsembleSpec spec{clean.x_marginal(), Pmf::uniform(3)};
    spec.epsilon = 0.05;

    SUBCASE("noise-free identity Phi^{Y|U} = B~ Phi^{X|U}") {
        for (std::size_t i = 0; i < 10; ++i) {
            const MarkovPushResult r = markov_push(sample_configuration(spec, i).config, clean);
            CHECK(r.residual_norm <= 1e-12);
            CHECK(max_abs(r.exact.base().probs() - clean.y_marginal().probs()) < 1e-15);
        }
    }
    SUBCASE("identity channels reproduce the noise-free push") {
        const Configuration c = sample_configuration(spec, 0).config;
        const MarkovPushResult r =
            markov_push(c, clean, Channel::identity(clean.x_labels()), Channel::identity(clean.y_labels()));
        CHECK(r.residual_norm <= 1e-12);
        CHECK(max_abs(r.exact_phi - markov_push(c, clean).exact_phi) < 1e-14);
    }
    SUBCASE("residual grows linearly in eta") {
        const Configuration c = sample_configuration(spec, 2).config;
        std::vector<double> etas{0.01, 0.02, 0.04, 0.08};
        std::vector<double> res;
        for (double eta : etas) {
            const Channel cx = Channel::make(Channel::symmetric_perturbation(4), eta);
            const Channel cy = Channel::make(Channel::symmetric_perturbation(3), eta);
            res.push_back(markov_push(c, clean, cx, cy).residual_norm);
        }
        CHECK(ufs::testing::loglog_slope(etas, res) == doctest::Approx(1.0).epsilon(0.2));
    }
    SUBCASE("exact side is P_{Y^|Y} P_{Y|X} P_{X|U}") {
        const Configuration c = sample_configuration(spec, 4).config;
        const Channel cx = Channel::make(Channel::symmetric_perturbation(4), 0.05);
        const Channel cy = Channel::make(Channel::symmetric_perturbation(3), 0.1);
        const MarkovPushResult r = markov_push(c, clean, cx, cy);
        const JointPmf noisy = apply_channels(clean, cx, cy);
        // Oracle: the joint of (U, Y^) divided by the prior.
        for (Eigen::Index w = 0; w < 3; ++w) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
            for (Eigen::Index i = 0; i < 4; ++i)
                for (Eigen::Index j = 0; j < 3; ++j)
                    for (Eigen::Index jh = 0; jh < 3; ++jh)
                        y(jh) += cy.matrix()(jh, j) * clean.probs()(j, i) / clean.x_marginal()[i] *
                                 c.conditionals()(i, w);
            CHECK(max_abs(r.exact.conditionals().col(w) - y) < 1e-14);
        }
        CHECK(max_abs(r.observed.base().probs() - noisy.x_marginal().probs()) < 1e-15);
        CHECK(max_abs(r.exact.base().probs() - noisy.y_marginal().probs()) < 1e-15);
    }
    SUBCASE("transposed joint runs the V side") {
        AttributeEnsembleSpec vspec{clean.y_marginal(), Pmf::uniform(2)};
        const Configuration c = sample_configuration(vspec, 0).config;
        const MarkovPushResult r = markov_push(c, transposed(clean));
        CHECK(r.residual_norm <= 1e-12);
        CHECK(r.exact.z_size() == 4);
        CHECK(transposed(transposed(clean)).probs() == clean.probs());
    }
    SUBCASE("base mismatch") {
        const Configuration c = sample_configuration(uniform_spec(0.05), 0).config;
        CHECK_THROWS_AS(markov_push(c, clean), InvalidArgument);
    }
}
