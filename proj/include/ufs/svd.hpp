#pragma once

#include <Eigen/Dense>

namespace ufs {

/// Thin SVD A = U diag(sigma) V^T with r = min(rows, cols) columns in U and
/// V and sigma sorted descending.
struct Svd {
    Eigen::MatrixXd u;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd v;
    int sweeps = 0;
    bool converged = false;
};

/// Scales v so that its largest-magnitude entry is positive (ties go to the
/// lowest index). Returns true when v was negated.
bool apply_sign_convention(Eigen::Ref<Eigen::VectorXd> v);

/// One-sided (Hestenes) Jacobi SVD. Column pairs are visited in the fixed
/// cyclic order (0,1), (0,2), ..., (n-2,n-1); a pair is rotated while
/// |<a_p, a_q>| > tol * ||a_p|| ||a_q||, and the iteration stops after the
/// first sweep with no rotation. Each singular pair is signed by the
/// convention applied to its right vector; left vectors belonging to zero
/// singular values are completed deterministically from the standard basis.
Svd jacobi_svd(const Eigen::MatrixXd& a, double tol = 1e-14, int max_sweeps = 100);

/// Appends to `basis` (orthonormal columns) further orthonormal columns until
/// it has `target` columns, drawing candidates e_0, e_1, ... and keeping
/// those with a residual above 1e-8 after two Gram-Schmidt passes.
Eigen::MatrixXd complete_orthonormal_basis(const Eigen::MatrixXd& basis, Eigen::Index dim, Eigen::Index target);

}  // namespace ufs
