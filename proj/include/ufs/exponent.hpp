#pragma once

// Error exponents of feature-based binary tests: the local analytic formula,
// large-deviations oracles, Monte Carlo fits, and ensemble averages.
//
// All exponents are in nats per sample. The decision rule throughout is the
// nearest-centroid test on the empirical feature mean, which reduces to a
// threshold test on the scalar statistic t(z) = a^T h(z) with
// a = mu_1 - mu_2 and threshold c = a^T (mu_1 + mu_2) / 2.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ufs/ensemble.hpp"
#include "ufs/geometry.hpp"
#include "ufs/model.hpp"
#include "ufs/parallel.hpp"

namespace ufs {

/// (epsilon^2 / 8) * sum_j <phi1 - phi2, psi_j>^2.
double analytic_pairwise_exponent(const Eigen::MatrixXd& psi, const Eigen::VectorXd& phi1,
                                  const Eigen::VectorXd& phi2, double epsilon);

struct PairExponent {
    std::size_t first = 0;
    std::size_t second = 0;
    double value = 0.0;
};

/// Attribute pair (u, u') with the smallest analytic exponent; ties go to the
/// lexicographically first pair.
PairExponent least_distinguishable_pair(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& phi, double epsilon);

struct IProjection {
    double exponent = 0.0;  ///< min(first, second)
    double first = 0.0;     ///< min D(Q || p1) over the decision boundary
    double second = 0.0;    ///< min D(Q || p2) over the decision boundary
    bool degenerate = false;  ///< the features do not separate p1 and p2
};

/// Exact exponent of the nearest-centroid test, from the Legendre dual of the
/// I-projection onto the decision boundary {Q : E_Q[t] = c}.
IProjection iprojection_exponent(const Pmf& p1, const Pmf& p2, const FeatureSet& fs);

/// Chernoff information -min_{l in [0,1]} log sum p1^l p2^(1-l); the exponent
/// of the full likelihood-ratio test, an upper reference for any feature test.
double chernoff_information(const Pmf& p1, const Pmf& p2);

struct McOptions {
    std::vector<std::size_t> n_grid;
    std::size_t min_errors = 50;        ///< grid points with fewer errors are dropped
    std::size_t target_errors = 1000;   ///< simulation at a grid point stops after this many
    std::size_t max_trials = 4'000'000;
    std::size_t chunk = 16384;          ///< trials per independently seeded chunk
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct McPoint {
    std::size_t n = 0;
    std::size_t trials = 0;
    double errors = 0.0;  ///< ties count one half
};

struct McFit {
    double exponent = 0.0;
    double stderr_exponent = 0.0;
    double intercept = 0.0;
    double inverse_n = 0.0;
    std::vector<McPoint> points;  ///< retained grid points
    std::size_t dropped = 0;      ///< grid points with fewer than min_errors errors
};

struct McCurve {
    double exponent = 0.0;        ///< min of the two per-hypothesis fits
    double stderr_exponent = 0.0;
    McFit first;                  ///< errors under p1
    McFit second;                 ///< errors under p2
    bool degenerate = false;
};

/// Simulates the nearest-centroid test with multinomial sample counts and fits
/// log p(N) + log(N)/2 = b0 - E N + b1 / N by weighted least squares, one fit
/// per true hypothesis. Throws Error("budget") when no grid point keeps enough
/// errors for a fit.
McCurve mc_error_curve(const Pmf& p1, const Pmf& p2, const FeatureSet& fs, const McOptions& options);

/// Grid N_j = ceil(t_j / exponent) for t_j = 1, ..., points.
std::vector<std::size_t> mc_grid(double exponent, std::size_t points = 8);

struct ChainModel {
    JointPmf clean;
    Channel chan_x;
    Channel chan_y;

    JointPmf noisy() const;
    void validate() const;
};

struct TheoremBound {
    /// (U|S, V|S, U|T, V|T) = (C_U e^2 k, C_V e^2 S, C_U e^2 S, C_V e^2 k), S = sum_{i<=k} sigma_i^2.
    std::array<double, 4> bound{};
    double residual = 0.0;  ///< slack * e^2 * max{d + h1 + d h1, d + h2 + d h2}
};

TheoremBound theorem_bound(double epsilon, std::size_t k, const Eigen::VectorXd& sigmas, double c_u, double c_v,
                           double delta, double eta1, double eta2, double slack = 1.0);

/// max{delta + eta1 + delta*eta1, delta + eta2 + delta*eta2}.
double residual_scale(double delta, double eta1, double eta2);

struct TheoremConstants {
    MeanStderr c_u;  ///< E||Phi^{X^|U}||_F^2 / (4 |X| |U|)
    MeanStderr c_v;  ///< E||Phi^{Y^|V}||_F^2 / (4 |Y| |V|)
};

TheoremConstants theorem_constants(const AttributeEnsembleSpec& mu_u, const AttributeEnsembleSpec& mu_v,
                                   const ChainModel& chain, std::size_t n_configs, unsigned jobs = 1);

struct AverageOptions {
    std::size_t n_configs = 200;
    bool oracle = false;  ///< per-pair value from iprojection_exponent instead of the analytic formula
    unsigned jobs = 1;
};

struct ExponentReport {
    MeanStderr e_u_s;
    MeanStderr e_v_s;
    MeanStderr e_u_t;
    MeanStderr e_v_t;
    TheoremConstants constants;
    double epsilon = 0.0;
    std::size_t k = 0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    std::uint64_t seed_u = 0;
    std::uint64_t seed_v = 0;
    std::size_t n_configs = 0;
    bool oracle = false;

    std::array<MeanStderr, 4> exponents() const { return {e_u_s, e_v_s, e_u_t, e_v_t}; }
};

/// Averages of the least-distinguishable-pair exponents over the two attribute
/// ensembles. U configurations live on the clean X (base P_X) and V on the
/// clean Y (base P_Y); f acts on X^ and g on Y^. The configurations are drawn
/// from each spec's own seed, so the result does not depend on `jobs`.
ExponentReport average_exponents(const AttributeEnsembleSpec& mu_u, const AttributeEnsembleSpec& mu_v,
                                 const ChainModel& chain, const FeatureSet& f, const FeatureSet& g,
                                 const AverageOptions& options = {});

}  // namespace ufs
