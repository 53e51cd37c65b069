#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "support.hpp"
#include "ufs/svd.hpp"

using namespace ufs;
using ufs::testing::gaussian_matrix;

namespace {

void check_against_oracle(const Eigen::MatrixXd& a) {
    const Svd s = jacobi_svd(a);
    REQUIRE(s.converged);
    const Eigen::Index r = std::min(a.rows(), a.cols());
    const Eigen::BDCSVD<Eigen::MatrixXd> oracle(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double scale = std::max(1.0, oracle.singularValues()(0));
    CHECK((s.sigma - oracle.singularValues()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK(s.u.cols() == r);
    CHECK(s.v.cols() == r);
    CHECK((s.u.transpose() * s.u - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.v.transpose() * s.v - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.u * s.sigma.asDiagonal() * s.v.transpose() - a).cwiseAbs().maxCoeff() < 1e-12 * scale);
    for (Eigen::Index i = 1; i < r; ++i) CHECK(s.sigma(i - 1) >= s.sigma(i));
}

}  // namespace

TEST_CASE("sign convention") {
    Eigen::VectorXd v(3);
    v << 0.2, -0.9, 0.1;
    CHECK(apply_sign_convention(v));
    CHECK(v(1) == 0.9);
    CHECK_FALSE(apply_sign_convention(v));
    Eigen::VectorXd tie(2);
    tie << -0.5, 0.5;
    CHECK(apply_sign_convention(tie));
    CHECK(tie(0) == 0.5);
}

TEST_CASE("jacobi svd matches a dense oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto rows = static_cast<Eigen::Index>(1 + seed % 7);
        const auto cols = static_cast<Eigen::Index>(1 + (seed * 3) % 8);
        check_against_oracle(gaussian_matrix(rows, cols, seed));
    }
}

TEST_CASE("jacobi svd on rank-deficient and structured input") {
    SUBCASE("rank one") {
        const Eigen::Vector3d u(1, 2, 3);
        const Eigen::Vector4d v(1, -1, 0, 2);
        check_against_oracle(u * v.transpose());
        const Svd s = jacobi_svd(u * v.transpose());
        CHECK(s.sigma(1) < 1e-13);
    }
    SUBCASE("zero matrix") {
        const Svd s = jacobi_svd(Eigen::MatrixXd::Zero(3, 3));
        CHECK(s.sigma.isZero());
        CHECK((s.u.transpose() * s.u).isIdentity(1e-14));
    }
    SUBCASE("repeated singular values") {
        const Eigen::MatrixXd q = ufs::testing::random_orthogonal(4, 7);
        const Eigen::Vector4d d(2, 1, 1, 0.5);
        check_against_oracle(q * d.asDiagonal() * ufs::testing::random_orthogonal(4, 8).transpose());
    }
    SUBCASE("signs follow the right vectors") {
        const Svd s = jacobi_svd(gaussian_matrix(5, 4, 99));
        for (Eigen::Index i = 0; i < s.v.cols(); ++i) {
            Eigen::VectorXd copy = s.v.col(i);
            CHECK_FALSE(apply_sign_convention(copy));
        }
    }
    SUBCASE("deterministic") {
        const Eigen::MatrixXd a = gaussian_matrix(6, 5, 3);
        const Svd x = jacobi_svd(a);
        const Svd y = jacobi_svd(a);
        CHECK(x.u == y.u);
        CHECK(x.v == y.v);
        CHECK(x.sigma == y.sigma);
    }
}

TEST_CASE("orthonormal completion") {
    Eigen::MatrixXd b(3, 1);
    b << 1, 0, 0;
    const Eigen::MatrixXd c = complete_orthonormal_basis(b, 3, 3);
    CHECK(c.cols() == 3);
    CHECK((c.transpose() * c).isIdentity(1e-14));
    CHECK(c.col(0) == b.col(0));
}
