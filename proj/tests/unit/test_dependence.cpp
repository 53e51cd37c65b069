#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <vector>

#include "support.hpp"
#include "ufs/dependence.hpp"
#include "ufs/error.hpp"

using namespace ufs;
using ufs::testing::cdm_by_formula;
using ufs::testing::random_joint;
using ufs::testing::random_pmf;

namespace {

Eigen::MatrixXd bsc(double eta) {
    Eigen::MatrixXd t(2, 2);
    t << -1, 1, 1, -1;
    return Eigen::MatrixXd::Identity(2, 2) + eta * t;
}

}  // namespace

TEST_CASE("canonical dependence matrix") {
    SUBCASE("product joint") {
        const CdmMatrix c(JointPmf::product(random_pmf(3, 1), random_pmf(4, 2)));
        CHECK(c.matrix().cwiseAbs().maxCoeff() < 1e-16);
        CHECK(c.singular_values().isZero());
    }
    SUBCASE("perfectly correlated binary joint") {
        Eigen::MatrixXd p(2, 2);
        p << 0.5, 0, 0, 0.5;
        const CdmMatrix c(JointPmf{p});
        Eigen::MatrixXd expect(2, 2);
        expect << 0.5, -0.5, -0.5, 0.5;
        CHECK(max_abs(c.matrix() - expect) < 1e-15);
        CHECK(c.singular_values()(0) == doctest::Approx(1.0));
    }
    SUBCASE("formula, null directions and dense oracle on random joints") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const JointPmf j = random_joint(2 + seed % 6, 2 + (seed / 6) % 6, seed);
            const CdmMatrix c(j);
            CHECK(max_abs(c.matrix() - cdm_by_formula(j)) < 1e-15);
            CHECK((c.matrix() * j.x_marginal().sqrt_probs()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((c.matrix().transpose() * j.y_marginal().sqrt_probs()).cwiseAbs().maxCoeff() < 1e-10);
            const Eigen::JacobiSVD<Eigen::MatrixXd> oracle(cdm_by_formula(j));
            const Eigen::Index r = oracle.singularValues().size();
            CHECK((c.singular_values().head(r) - oracle.singularValues()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(c.singular_values().maxCoeff() <= 1.0 + 1e-10);
            CHECK(c.singular_values().minCoeff() >= 0.0);
            const auto k = c.left_vectors().cols();
            CHECK((c.left_vectors().transpose() * c.left_vectors() - Eigen::MatrixXd::Identity(k, k))
                      .cwiseAbs().maxCoeff() < 1e-8);
            CHECK((c.right_vectors().transpose() * c.right_vectors() - Eigen::MatrixXd::Identity(k, k))
                      .cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SUBCASE("zero marginal symbol is named") {
        Eigen::MatrixXd p(2, 3);
        p << 0.5, 0.0, 0.0, 0.0, 0.0, 0.5;
        try {
            CdmMatrix c(JointPmf(Labels{"a", "b", "c"}, Labels{"0", "1"}, p));
            FAIL("expected an error");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("'b'") != std::string::npos);
        }
    }
}

TEST_CASE("uncentered B") {
    SUBCASE("identity channel") {
        const Pmf in = random_pmf(3, 4);
        const UncenteredB b(Channel::identity(in.labels()), in);
        CHECK(b.matrix().isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-15));
    }
    SUBCASE("binary symmetric channel with uniform input") {
        const double eta = 0.15;
        const UncenteredB b(Channel::from_matrix(bsc(eta)), Pmf::uniform(2));
        CHECK(max_abs(b.matrix() - bsc(eta)) < 1e-15);
        CHECK(b.singular_values()(0) == doctest::Approx(1.0));
        CHECK(b.singular_values()(1) == doctest::Approx(1.0 - 2.0 * eta));
    }
    SUBCASE("top singular value is one with the sqrt(P) pair") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Pmf in = random_pmf(4, seed);
            const Channel c = Channel::make(Channel::symmetric_perturbation(4), 0.1 + 0.05 * seed);
            const UncenteredB b(c, in);
            CHECK(b.singular_values()(0) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(b.singular_values().minCoeff() >= 0.0);
            CHECK((b.matrix() * in.sqrt_probs() - b.output().sqrt_probs()).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SUBCASE("spectral range is linear in eta") {
        const Pmf in = random_pmf(4, 17);
        std::vector<double> etas{0.01, 0.02, 0.04, 0.06, 0.08, 0.1}, ranges;
        for (double eta : etas)
            ranges.push_back(UncenteredB(Channel::make(Channel::symmetric_perturbation(4), eta), in).spectral_range());
        CHECK(ufs::testing::loglog_slope(etas, ranges) == doctest::Approx(1.0).epsilon(0.2));
        for (std::size_t i = 0; i < etas.size(); ++i) CHECK(ranges[i] / etas[i] < 2.0 * ranges[0] / etas[0]);
    }
}

TEST_CASE("composition with channels") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const JointPmf j = random_joint(3, 4, seed);
        const Channel cx = Channel::make(Channel::symmetric_perturbation(3), 0.2, j.x_labels());
        const Channel cy = Channel::make(Channel::symmetric_perturbation(4), 0.1, j.y_labels());
        const CdmMatrix noisy(apply_channels(j, cx, cy));
        const Eigen::MatrixXd bx = UncenteredB(cx, j.x_marginal()).matrix();
        const Eigen::MatrixXd by = UncenteredB(cy, j.y_marginal()).matrix();
        CHECK(max_abs(noisy.matrix() - by * CdmMatrix(j).matrix() * bx.transpose()) < 1e-10);
        // Data processing: the noisy spectrum is dominated entrywise.
        const Eigen::VectorXd clean = hgr_profile(j);
        CHECK((noisy.singular_values() - clean).maxCoeff() <= 1e-12);
    }
}

TEST_CASE("feature selection") {
    SUBCASE("full rank selection is normalized") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const JointPmf j = random_joint(3 + seed % 4, 3 + (seed / 4) % 4, seed);
            const std::size_t kmax = std::min(j.x_size(), j.y_size()) - 1;
            for (std::size_t k = 1; k <= kmax; ++k) {
                const FeatureSelection s = select_features(j, k);
                const Eigen::MatrixXd& f = s.f.values();
                const Eigen::VectorXd& px = j.x_marginal().probs();
                CHECK((f.transpose() * px).cwiseAbs().maxCoeff() <= 1e-10);
                const Eigen::MatrixXd gram = f.transpose() * px.asDiagonal() * f;
                CHECK((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-8);
            }
        }
    }
    SUBCASE("perfectly correlated binary joint") {
        Eigen::MatrixXd p(2, 2);
        p << 0.5, 0, 0, 0.5;
        const FeatureSelection s = select_features(JointPmf(p), 1);
        CHECK(std::abs(s.f.values()(0, 0)) == doctest::Approx(1.0));
        CHECK(s.f.values()(0, 0) == doctest::Approx(-s.f.values()(1, 0)));
        CHECK(max_abs(s.f.values() - s.g.values()) < 1e-12);
        CHECK(s.sigma(0) == doctest::Approx(1.0));
    }
    SUBCASE("independent joint is flagged") {
        const FeatureSelection s = select_features(JointPmf::product(Pmf::uniform(3), Pmf::uniform(3)), 1);
        CHECK(s.zero_sigma == std::vector<std::size_t>{0});
        CHECK(s.f.k() == 1);
    }
    SUBCASE("k out of range") {
        const JointPmf j = random_joint(3, 4, 1);
        CHECK_THROWS_AS(select_features(j, 0), InvalidArgument);
        CHECK_THROWS_AS(select_features(j, 3), InvalidArgument);
    }
    SUBCASE("repeated singular values are flagged and the subspace is exact") {
        // Symmetric 3x3 joint: mixture of independence and the diagonal, sigma_1 = sigma_2 = t.
        const double t = 0.4;
        const Eigen::MatrixXd p = ((1.0 - t) / 9.0) * Eigen::MatrixXd::Ones(3, 3) + (t / 3.0) * Eigen::MatrixXd::Identity(3, 3);
        const JointPmf j(p);
        const FeatureSelection s = select_features(j, 2);
        REQUIRE(s.degenerate.size() == 1);
        CHECK(s.degenerate[0] == std::vector<std::size_t>{0, 1});
        CHECK(s.sigma(0) == doctest::Approx(t));
        CHECK(s.sigma(1) == doctest::Approx(t));
        const Eigen::MatrixXd psi = j.x_marginal().sqrt_probs().asDiagonal() * s.f.values();
        const Eigen::VectorXd root = j.x_marginal().sqrt_probs();
        const Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(3, 3) - root * root.transpose();
        CHECK(max_abs(subspace_projector(psi) - expect) < 1e-10);
    }
}

TEST_CASE("hgr profile") {
    Eigen::MatrixXd p(2, 2);
    p << 0.4, 0.1, 0.1, 0.4;
    const Eigen::VectorXd s = hgr_profile(JointPmf(p));
    CHECK(s(0) == doctest::Approx(0.6));
    CHECK(hgr_profile(JointPmf::product(Pmf::uniform(3), Pmf::uniform(2))).isZero(1e-15));
}
