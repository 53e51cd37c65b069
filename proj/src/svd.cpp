#include "ufs/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ufs/error.hpp"

namespace ufs {

bool apply_sign_convention(Eigen::Ref<Eigen::VectorXd> v) {
    if (v.size() == 0) return false;
    Eigen::Index best = 0;
    double best_abs = std::abs(v(0));
    const double tie = 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v(i)) > best_abs + tie) {
            best = i;
            best_abs = std::abs(v(i));
        }
    }
    if (v(best) < 0.0) {
        v = -v;
        return true;
    }
    return false;
}

Eigen::MatrixXd complete_orthonormal_basis(const Eigen::MatrixXd& basis, Eigen::Index dim, Eigen::Index target) {
    Eigen::MatrixXd out(dim, target);
    Eigen::Index filled = std::min<Eigen::Index>(basis.cols(), target);
    if (filled > 0) out.leftCols(filled) = basis.leftCols(filled);
    for (Eigen::Index e = 0; e < dim && filled < target; ++e) {
        Eigen::VectorXd cand = Eigen::VectorXd::Unit(dim, e);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < filled; ++j) cand -= out.col(j).dot(cand) * out.col(j);
        }
        const double norm = cand.norm();
        if (norm > 1e-8) {
            out.col(filled) = cand / norm;
            apply_sign_convention(out.col(filled));
            ++filled;
        }
    }
    if (filled < target) throw InvalidArgument("complete_orthonormal_basis: requested more columns than the dimension");
    return out;
}

namespace {

// Requires a.rows() >= a.cols().
Svd jacobi_tall(const Eigen::MatrixXd& a, double tol, int max_sweeps) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Eigen::MatrixXd w = a;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    // Columns at rounding level relative to A carry no direction and never settle.
    const double negligible = a.squaredNorm() * 1e-30;
    Svd out;
    for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = w.col(p).squaredNorm();
                const double beta = w.col(q).squaredNorm();
                const double gamma = w.col(p).dot(w.col(q));
                if (alpha <= negligible || beta <= negligible) continue;
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < m; ++i) {
                    const double wp = w(i, p);
                    const double wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) {
            out.converged = true;
            break;
        }
    }

    std::vector<double> norms(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) norms[static_cast<std::size_t>(j)] = w.col(j).norm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index l, Eigen::Index r) {
        return norms[static_cast<std::size_t>(l)] > norms[static_cast<std::size_t>(r)];
    });

    const double sigma_max = n > 0 ? norms[static_cast<std::size_t>(order[0])] : 0.0;
    const double zero_cut = sigma_max * 1e-14;
    out.sigma.resize(n);
    out.v.resize(n, n);
    Eigen::MatrixXd u_nonzero(m, n);
    Eigen::Index nonzero = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index j = order[static_cast<std::size_t>(k)];
        const double s = norms[static_cast<std::size_t>(j)];
        out.v.col(k) = v.col(j);
        if (s > zero_cut && s > 0.0) {
            out.sigma(k) = s;
            u_nonzero.col(nonzero++) = w.col(j) / s;
        } else {
            out.sigma(k) = 0.0;
        }
    }
    out.u = complete_orthonormal_basis(u_nonzero.leftCols(nonzero), m, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k < nonzero) {
            if (apply_sign_convention(out.v.col(k))) out.u.col(k) = -out.u.col(k);
        } else {
            apply_sign_convention(out.v.col(k));
        }
    }
    return out;
}

}  // namespace

Svd jacobi_svd(const Eigen::MatrixXd& a, double tol, int max_sweeps) {
    if (a.size() == 0) throw InvalidArgument("jacobi_svd: empty matrix");
    if (!a.allFinite()) throw InvalidArgument("jacobi_svd: non-finite entry");
    if (a.rows() >= a.cols()) return jacobi_tall(a, tol, max_sweeps);
    Svd t = jacobi_tall(a.transpose(), tol, max_sweeps);
    std::swap(t.u, t.v);
    // Re-sign so the convention holds on the right vectors of A.
    const Eigen::Index r = t.sigma.size();
    for (Eigen::Index k = 0; k < r; ++k) {
        if (t.sigma(k) > 0.0) {
            if (apply_sign_convention(t.v.col(k))) t.u.col(k) = -t.u.col(k);
        } else {
            apply_sign_convention(t.v.col(k));
        }
    }
    return t;
}

}  // namespace ufs
