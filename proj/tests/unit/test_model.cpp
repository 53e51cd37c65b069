#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "support.hpp"
#include "ufs/error.hpp"
#include "ufs/model.hpp"

using namespace ufs;
using ufs::testing::random_joint;
using ufs::testing::random_pmf;

namespace {

Eigen::MatrixXd bsc_perturbation() {
    Eigen::MatrixXd t(2, 2);
    t << -1, 1, 1, -1;
    return t;
}

// Largest eta keeping I + eta T inside [0, 1], found by bisection on the
// validity predicate alone.
double probed_max_eta(const Eigen::MatrixXd& t) {
    auto valid = [&](double eta) {
        const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(t.rows(), t.cols()) + eta * t;
        return p.minCoeff() >= -1e-15 && p.maxCoeff() <= 1.0 + 1e-15;
    };
    double lo = 0.0, hi = 1.0;
    while (valid(hi)) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (valid(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

TEST_CASE("pmf validation") {
    CHECK_NOTHROW(Pmf(Eigen::Vector2d(0.25, 0.75)));
    CHECK_THROWS_AS(Pmf(Eigen::Vector2d(0.5, 0.6)), InvalidArgument);
    CHECK_THROWS_AS(Pmf(Eigen::Vector2d(-0.1, 1.1)), InvalidArgument);
    CHECK_THROWS_AS(Pmf(Eigen::VectorXd()), InvalidArgument);
    CHECK_THROWS_AS(Pmf({"a", "a"}, Eigen::Vector2d(0.5, 0.5)), InvalidArgument);
    CHECK_NOTHROW(Pmf(Eigen::Vector2d(0.5, 0.5 + 5e-13)));

    const Pmf p({"a", "b", "c"}, Eigen::Vector3d(0.5, 0.0, 0.5));
    CHECK_FALSE(p.strictly_positive());
    try {
        p.require_strictly_positive("test");
        FAIL("expected an error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
    const Pmf s = p.smoothed(1.0);
    CHECK(s.strictly_positive());
    CHECK(s[1] == doctest::Approx(0.25));
}

TEST_CASE("joint marginals and conditionals") {
    Eigen::MatrixXd m(2, 3);  // rows over Y, columns over X
    m << 0.1, 0.2, 0.1, 0.3, 0.1, 0.2;
    const JointPmf j(m);
    CHECK(j.x_marginal().probs().isApprox(Eigen::Vector3d(0.4, 0.3, 0.3), 1e-15));
    CHECK(j.y_marginal().probs().isApprox(Eigen::Vector2d(0.4, 0.6), 1e-15));
    const Eigen::MatrixXd ygx = j.y_given_x();
    CHECK(ygx(0, 0) == doctest::Approx(0.25));
    CHECK((ygx.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
    const Eigen::MatrixXd xgy = j.x_given_y();
    CHECK((xgy.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
    const JointPmf prod = JointPmf::product(j.x_marginal(), j.y_marginal());
    CHECK(prod.probs()(1, 2) == doctest::Approx(0.6 * 0.3));
}

TEST_CASE("joint from samples") {
    SUBCASE("counting") {
        const std::vector<SamplePair> s{{"a", "0"}, {"a", "0"}, {"b", "1"}, {"b", "1"}};
        const JointPmf j = joint_from_samples(s);
        CHECK(j.x_labels() == Labels{"a", "b"});
        CHECK(j.y_labels() == Labels{"0", "1"});
        CHECK(j.probs()(0, 0) == 0.5);
        CHECK(j.probs()(1, 1) == 0.5);
        CHECK(j.probs()(0, 1) == 0.0);
    }
    SUBCASE("single pair is a point mass") {
        const std::vector<SamplePair> s{{"a", "0"}};
        const JointPmf j = joint_from_samples(s);
        CHECK(j.probs().size() == 1);
        CHECK(j.probs()(0, 0) == 1.0);
    }
    SUBCASE("declared alphabets and unknown labels") {
        const std::vector<SamplePair> s{{"a", "0"}, {"c", "0"}};
        try {
            joint_from_samples(s, Labels{"a", "b"}, Labels{"0", "1"});
            FAIL("expected an error");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("record 1") != std::string::npos);
        }
        const JointPmf j = joint_from_samples(std::vector<SamplePair>{{"b", "1"}}, Labels{"a", "b"}, Labels{"0", "1"});
        CHECK(j.probs()(1, 1) == 1.0);
        CHECK(j.probs()(0, 0) == 0.0);
    }
    SUBCASE("empty stream") { CHECK_THROWS_AS(joint_from_samples(std::vector<SamplePair>{}), InvalidArgument); }
    SUBCASE("sampled joint converges to the truth") {
        const JointPmf truth = random_joint(3, 3, 42);
        Rng rng = make_rng(42, 1, 0);
        const auto draws = draw_samples(truth, 10000, rng);
        const JointPmf est = joint_from_samples(draws, truth.x_labels(), truth.y_labels());
        CHECK(max_abs(est.probs() - truth.probs()) < 0.02);
    }
}

TEST_CASE("channel construction") {
    const Eigen::MatrixXd t = bsc_perturbation();
    SUBCASE("eta = 0 gives the identity") {
        const Channel c = Channel::make(t, 0.0);
        CHECK(c.matrix() == Eigen::MatrixXd::Identity(2, 2));
    }
    SUBCASE("binary symmetric channel") {
        const Channel c = Channel::make(t, 0.1);
        Eigen::MatrixXd expect(2, 2);
        expect << 0.9, 0.1, 0.1, 0.9;
        CHECK(max_abs(c.matrix() - expect) < 1e-15);
    }
    SUBCASE("infeasible eta reports the bound") {
        try {
            Channel::make(t, 1.2);
            FAIL("expected a feasibility error");
        } catch (const FeasibilityError& e) {
            CHECK(e.max_feasible() == doctest::Approx(1.0));
            CHECK(std::string(e.what()).find("eta exceeds feasibility bound") != std::string::npos);
        }
    }
    SUBCASE("columns of T must sum to zero") {
        Eigen::MatrixXd bad = t;
        bad(0, 0) = -0.5;
        CHECK_THROWS_AS(Channel::make(bad, 0.1), InvalidArgument);
    }
    SUBCASE("exact feasibility bound matches a probe") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            // Random perturbation: nonnegative off-diagonal, diagonal balancing each column.
            Eigen::MatrixXd r = ufs::testing::gaussian_matrix(4, 4, seed).cwiseAbs();
            r.diagonal().setZero();
            for (Eigen::Index c = 0; c < 4; ++c) r(c, c) = -r.col(c).sum();
            CHECK(Channel::max_feasible_eta(r) == doctest::Approx(probed_max_eta(r)).epsilon(1e-12));
        }
        CHECK(Channel::max_feasible_eta(Eigen::MatrixXd::Zero(3, 3)) == std::numeric_limits<double>::infinity());
    }
    SUBCASE("decomposition round trip") {
        const Eigen::MatrixXd ts = Channel::symmetric_perturbation(4);
        const Channel c = Channel::make(ts, 0.07);
        const Channel d = Channel::from_matrix(c.matrix());
        CHECK(d.eta() == doctest::Approx(c.eta()).epsilon(1e-12));
        CHECK(max_abs(d.perturbation() - c.perturbation()) < 1e-12);
    }
}

TEST_CASE("apply channels") {
    const JointPmf j = random_joint(3, 4, 5);
    SUBCASE("identity channels") {
        const JointPmf out = apply_channels(j, Channel::identity(j.x_labels()), Channel::identity(j.y_labels()));
        CHECK(out.probs() == j.probs());
    }
    SUBCASE("explicit summation oracle and marginal commutation") {
        const Channel cx = Channel::make(Channel::symmetric_perturbation(3), 0.2, j.x_labels());
        const Channel cy = Channel::make(Channel::symmetric_perturbation(4), 0.1, j.y_labels());
        const JointPmf out = apply_channels(j, cx, cy);
        Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(4, 3);
        for (int xh = 0; xh < 3; ++xh)
            for (int yh = 0; yh < 4; ++yh)
                for (int x = 0; x < 3; ++x)
                    for (int y = 0; y < 4; ++y)
                        oracle(yh, xh) += cx.matrix()(xh, x) * cy.matrix()(yh, y) * j.probs()(y, x);
        CHECK(max_abs(out.probs() - oracle) < 1e-15);
        CHECK(std::abs(out.probs().sum() - 1.0) < 1e-12);
        CHECK(max_abs(out.x_marginal().probs() - cx.matrix() * j.x_marginal().probs()) < 1e-15);
    }
    SUBCASE("2x2 correlated joint through binary symmetric channels") {
        Eigen::MatrixXd m(2, 2);
        m << 0.4, 0.1, 0.1, 0.4;
        const Channel c = Channel::make(bsc_perturbation(), 0.1);
        const JointPmf out = apply_channels(JointPmf(m), c, c);
        // Diagonal: 0.4*(0.81+0.01) + 0.1*(0.09+0.09) = 0.346.
        CHECK(out.probs()(0, 0) == doctest::Approx(0.346).epsilon(1e-14));
        CHECK(out.probs()(0, 1) == doctest::Approx(0.154).epsilon(1e-14));
    }
    SUBCASE("independence is preserved") {
        const JointPmf prod = JointPmf::product(random_pmf(3, 1), random_pmf(3, 2));
        const Channel c = Channel::make(Channel::symmetric_perturbation(3), 0.3, prod.x_labels());
        const Channel d = Channel::make(Channel::symmetric_perturbation(3), 0.2, prod.y_labels());
        const JointPmf out = apply_channels(prod, c, d);
        const JointPmf ref = JointPmf::product(out.x_marginal(), out.y_marginal());
        CHECK(max_abs(out.probs() - ref.probs()) < 1e-15);
    }
    SUBCASE("alphabet mismatch") {
        CHECK_THROWS_AS(apply_channels(j, Channel::identity(index_labels(2)), Channel::identity(j.y_labels())),
                        InvalidArgument);
    }
}

TEST_CASE("reverse channel") {
    SUBCASE("identity") {
        const Pmf in = random_pmf(3, 9);
        CHECK(reverse_channel(Channel::identity(in.labels()), in).isApprox(Eigen::MatrixXd::Identity(3, 3)));
    }
    SUBCASE("symmetric channel with uniform input") {
        const Channel c = Channel::make(Channel::symmetric_perturbation(3), 0.3);
        CHECK(max_abs(reverse_channel(c, Pmf::uniform(3)) - c.matrix()) < 1e-15);
    }
    SUBCASE("binary channel by Bayes rule") {
        const Channel c = Channel::make(bsc_perturbation(), 0.2);
        const Pmf in(Eigen::Vector2d(0.3, 0.7));
        const Eigen::MatrixXd r = reverse_channel(c, in);
        // P(x^=0) = 0.8*0.3 + 0.2*0.7 = 0.38; P(x=0 | x^=0) = 0.24/0.38.
        CHECK(r(0, 0) == doctest::Approx(0.24 / 0.38).epsilon(1e-14));
        CHECK(r(1, 0) == doctest::Approx(0.14 / 0.38).epsilon(1e-14));
        CHECK(r(0, 1) == doctest::Approx(0.06 / 0.62).epsilon(1e-14));
    }
    SUBCASE("detailed balance on random instances") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Pmf in = random_pmf(4, seed);
            const Channel c = Channel::make(Channel::symmetric_perturbation(4), 0.05 + 0.05 * seed);
            const Eigen::MatrixXd r = reverse_channel(c, in);
            const Eigen::VectorXd out = c.matrix() * in.probs();
            CHECK(((r.colwise().sum().array() - 1.0).abs().maxCoeff()) < 1e-10);
            const Eigen::MatrixXd lhs = out.asDiagonal() * r.transpose();
            const Eigen::MatrixXd rhs = c.matrix() * in.probs().asDiagonal();
            CHECK(max_abs(lhs - rhs) < 1e-10);
        }
    }
    SUBCASE("zero output symbol is named") {
        Eigen::MatrixXd p(2, 2);
        p << 1.0, 1.0, 0.0, 0.0;
        const Channel c = Channel::from_matrix(p, Labels{"u", "v"});
        try {
            reverse_channel(c, Pmf(Labels{"u", "v"}, Eigen::Vector2d(0.5, 0.5)));
            FAIL("expected an error");
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("'v'") != std::string::npos);
        }
    }
}
