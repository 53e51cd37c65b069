#pragma once

// Second-moment symmetry of random matrix ensembles.
//
// For a random n x m matrix A the rank-one second moment is
//     m(u, v) = E[(u^T A v)^2] = (v (x) u)^T K (v (x) u),   K = E[vec(A) vec(A)^T],
// with vec stacking columns. The second-moment distance between A and
// Q1^T A Q2 is sup |m(Q1 u, Q2 v) - m(u, v)| over unit u, v. As Q1 u and Q2 v
// sweep every unit vector, the supremum over all orthogonal pairs equals the
// full range max m - min m, which is what delta_estimate reports.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "ufs/random.hpp"

namespace ufs {

class MatrixEnsemble {
public:
    using Sampler = std::function<Eigen::MatrixXd(Rng&)>;

    MatrixEnsemble(Eigen::Index rows, Eigen::Index cols, Sampler sampler, std::uint64_t seed = 0,
                   std::optional<double> declared_delta = std::nullopt);

    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::optional<double>& declared_delta() const noexcept { return declared_delta_; }

    /// Draw number `index`; reproducible for a fixed seed. Sampler failures
    /// are rethrown with the index attached.
    Eigen::MatrixXd sample(std::size_t index) const;

    MatrixEnsemble with_seed(std::uint64_t seed) const;
    /// c * A.
    MatrixEnsemble scaled(double c) const;
    /// B * A for a fixed rows x rows matrix B.
    MatrixEnsemble left_multiplied(const Eigen::MatrixXd& b) const;
    /// Q1^T * A * Q2.
    MatrixEnsemble conjugated(const Eigen::MatrixXd& q1, const Eigen::MatrixXd& q2) const;

    /// Independent N(0, 1) entries.
    static MatrixEnsemble gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed = 0);
    /// 2x2 with independent entries, A(0,0) ~ N(0, sigma2) and the rest N(0, 1).
    static MatrixEnsemble example_anisotropic(double sigma2, std::uint64_t seed = 0);
    /// xi * u v^T with xi ~ N(0, 1).
    static MatrixEnsemble rank_one(const Eigen::VectorXd& u, const Eigen::VectorXd& v, std::uint64_t seed = 0);

private:
    Eigen::Index rows_;
    Eigen::Index cols_;
    Sampler sampler_;
    std::uint64_t seed_;
    std::optional<double> declared_delta_;
};

/// M x (n*m) matrix whose row i is vec(draw i).
Eigen::MatrixXd draw_vectorized(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs = 1);

/// Empirical K = (1/M) sum vec(A_i) vec(A_i)^T. The draws are retained so
/// Monte Carlo error bars can be attached to any functional of K.
class SecondMomentForm {
public:
    SecondMomentForm(Eigen::MatrixXd draws, Eigen::Index rows, Eigen::Index cols);
    /// Exact form with no sampling error (sample_count() == 0).
    static SecondMomentForm exact(Eigen::MatrixXd k, Eigen::Index rows, Eigen::Index cols);

    const Eigen::MatrixXd& matrix() const noexcept { return k_; }
    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    std::size_t sample_count() const noexcept { return static_cast<std::size_t>(draws_.rows()); }
    const Eigen::MatrixXd& draws() const noexcept { return draws_; }

    /// Estimate of E||A||_F^2.
    double trace() const { return k_.trace(); }
    /// alpha = E||A||_F^2 / (n m).
    double alpha() const { return trace() / static_cast<double>(rows_ * cols_); }

    double rank_one_moment(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    /// Standard error of rank_one_moment; zero for exact forms.
    double rank_one_stderr(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

    /// sum_{j,j'} v_j v_j' K_(j,j') as an n x n matrix (K_(j,j') is the n x n block).
    Eigen::MatrixXd left_operator(const Eigen::VectorXd& v) const;
    /// sum_{i,i'} u_i u_i' K[(i,j),(i',j')] as an m x m matrix.
    Eigen::MatrixXd right_operator(const Eigen::VectorXd& u) const;

private:
    Eigen::MatrixXd draws_;
    Eigen::MatrixXd k_;
    Eigen::Index rows_;
    Eigen::Index cols_;
};

SecondMomentForm second_moment_form(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs = 1);

struct RankOneExtremum {
    double value = 0.0;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
};

struct RankOneRange {
    RankOneExtremum min;
    RankOneExtremum max;
    bool unconverged = false;
};

struct RankOneOptions {
    int restarts = 16;
    int max_iterations = 200;
    double tolerance = 1e-12;
    std::uint64_t seed = 0x5eed;
};

/// Extremes of m(u, v) over unit vectors by alternating eigen-iteration:
/// with v fixed the optimal u is an extreme eigenvector of left_operator(v),
/// and symmetrically for v. Starts from every coordinate vector e_j and from
/// `restarts` seeded random unit vectors; keeps the best.
RankOneRange rank_one_range(const SecondMomentForm& form, const RankOneOptions& options = {});

struct DeltaEstimate {
    double delta = 0.0;   ///< max m - min m
    double margin = 0.0;  ///< 3-sigma Monte Carlo margin on delta
    double alpha = 0.0;   ///< E||A||^2 / (n m)
    RankOneRange range;
    std::size_t samples = 0;
};

DeltaEstimate delta_from_form(const SecondMomentForm& form, const RankOneOptions& options = {});
DeltaEstimate delta_estimate(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs = 1,
                             const RankOneOptions& options = {});

/// A statistic together with its 3-sigma Monte Carlo bar.
struct BarredValue {
    double value = 0.0;
    double bar = 0.0;
    bool within_bar_of_zero() const noexcept { return value <= bar; }
};

/// First- and second-moment consequences of exact spherical symmetry.
struct Lemma1Report {
    BarredValue mean_norm;             ///< max_ij |E A_ij|
    BarredValue max_moment_spread;     ///< max_ij E A_ij^2 - min_ij E A_ij^2
    BarredValue max_cross_covariance;  ///< max |Cov(A_ij, A_kl)| over distinct entries
    std::size_t samples = 0;
};

Lemma1Report lemma1_report(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs = 1);

struct Lemma4Result {
    double lhs = 0.0;     ///< |E||G^T A H||^2 - ||G||^2 ||H||^2 E||A||^2 / (n m)|
    double bound = 0.0;   ///< 2 ||G||^2 ||H||^2 delta + margin
    double margin = 0.0;  ///< 3-sigma Monte Carlo margin
    bool pass = false;
};

Lemma4Result lemma4_check(const MatrixEnsemble& ens, const Eigen::MatrixXd& g, const Eigen::MatrixXd& h, double delta,
                          std::size_t samples, unsigned jobs = 1);

/// gamma = (alpha + delta)(s1^2 - sn^2) + s1^2 delta, where s1 >= ... >= sn
/// are the singular values of the square matrix B.
double gamma_propagation(const Eigen::MatrixXd& b, double delta, double alpha);

struct PropagationResult {
    DeltaEstimate delta_in;
    DeltaEstimate delta_out;
    double gamma_bound = 0.0;
    /// delta_out's margin plus delta_in's margin scaled by d gamma / d delta.
    double margin = 0.0;
    bool pass = false;
};

/// Compares the measured symmetry deviation of B*A with the bound gamma
/// computed from the measured deviation of A.
PropagationResult propagation_check(const MatrixEnsemble& ens, const Eigen::MatrixXd& b, std::size_t samples,
                                    unsigned jobs = 1, const RankOneOptions& options = {});

}  // namespace ufs
