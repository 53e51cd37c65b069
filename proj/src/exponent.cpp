#include "ufs/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "ufs/error.hpp"
#include "ufs/random.hpp"

namespace ufs {

namespace {

constexpr double kSeparationTolerance = 1e-13;

// Per-symbol statistic s(z) = a^T h(z) - c for the nearest-centroid rule,
// scaled so that max |s| = 1. Empty when the features do not separate p1, p2.
Eigen::VectorXd centroid_statistic(const Pmf& p1, const Pmf& p2, const FeatureSet& fs) {
    if (p1.labels() != fs.base().labels() || p2.labels() != fs.base().labels())
        throw InvalidArgument("hypotheses and feature set use different alphabets");
    const Eigen::MatrixXd& h = fs.values();
    const Eigen::VectorXd mu1 = h.transpose() * p1.probs();
    const Eigen::VectorXd mu2 = h.transpose() * p2.probs();
    const Eigen::VectorXd a = mu1 - mu2;
    if (a.norm() <= kSeparationTolerance) return {};
    const double c = a.dot(mu1 + mu2) / 2.0;
    Eigen::VectorXd s = (h * a).array() - c;
    const double scale = s.cwiseAbs().maxCoeff();
    return s / scale;
}

double log_mgf(const Eigen::VectorXd& p, const Eigen::VectorXd& s, double lambda) {
    const Eigen::ArrayXd e = lambda * s.array();
    const double m = e.maxCoeff();
    return m + std::log((p.array() * (e - m).exp()).sum());
}

// Tilted mean and variance of s under p_lambda.
std::pair<double, double> tilted_moments(const Eigen::VectorXd& p, const Eigen::VectorXd& s, double lambda) {
    const Eigen::ArrayXd e = lambda * s.array();
    const Eigen::ArrayXd w = p.array() * (e - e.maxCoeff()).exp();
    const double z = w.sum();
    const double mean = (w * s.array()).sum() / z;
    const double var = (w * (s.array() - mean).square()).sum() / z;
    return {mean, var};
}

// -min_lambda log E_p exp(lambda s): the large-deviations rate of the event
// {mean of s crosses 0}. Safeguarded Newton on the derivative.
double crossing_rate(const Eigen::VectorXd& p, const Eigen::VectorXd& s) {
    const bool has_neg = (s.array() < 0.0).any();
    const bool has_pos = (s.array() > 0.0).any();
    if (!has_neg || !has_pos) {
        double mass = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) == 0.0) mass += p(i);
        return mass > 0.0 ? -std::log(mass) : std::numeric_limits<double>::infinity();
    }
    const double d0 = p.dot(s);
    if (d0 == 0.0) return 0.0;
    const double dir = d0 > 0.0 ? -1.0 : 1.0;
    double lo = 0.0;
    double hi = dir;
    while (tilted_moments(p, s, hi).first * dir < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (std::abs(hi) > 1e6) break;
    }
    if (lo > hi) std::swap(lo, hi);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const auto [mean, var] = tilted_moments(p, s, x);
        if (mean == 0.0) break;
        if (mean > 0.0)
            hi = x;
        else
            lo = x;
        double next = var > 0.0 ? x - mean / var : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x)) || hi - lo <= 1e-15 * (1.0 + std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return std::max(0.0, -log_mgf(p, s, x));
}

struct WlsResult {
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
};

WlsResult weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& var) {
    const Eigen::VectorXd w = var.cwiseInverse();
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    const Eigen::MatrixXd normal = xtw * x;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    WlsResult out;
    out.beta = ldlt.solve(xtw * y);
    out.cov = ldlt.solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    const Eigen::Index dof = x.rows() - x.cols();
    if (dof > 0) {
        const Eigen::VectorXd r = y - x * out.beta;
        const double chi2 = (r.array().square() * w.array()).sum() / static_cast<double>(dof);
        out.cov *= std::max(1.0, chi2);
    }
    return out;
}

McPoint simulate_point(const Eigen::VectorXd& p, const Eigen::VectorXd& s, double sign, std::size_t n,
                       const McOptions& opt, std::uint64_t stream) {
    const auto z = static_cast<Eigen::Index>(p.size());
    // Counts one chunk of trials; returns errors doubled so ties stay integral.
    auto run_chunk = [&](std::size_t chunk_index) -> std::size_t {
        Rng rng = make_rng(opt.seed, stream, chunk_index);
        std::binomial_distribution<long long> first(static_cast<long long>(n), std::clamp(p(0), 0.0, 1.0));
        std::size_t doubled = 0;
        for (std::size_t t = 0; t < opt.chunk; ++t) {
            long long remaining = static_cast<long long>(n);
            double rest = 1.0;
            double stat = 0.0;
            for (Eigen::Index i = 0; i + 1 < z && remaining > 0; ++i) {
                long long c;
                if (i == 0) {
                    c = first(rng);
                } else {
                    const double q = std::clamp(p(i) / rest, 0.0, 1.0);
                    c = std::binomial_distribution<long long>(remaining, q)(rng);
                }
                stat += static_cast<double>(c) * s(i);
                remaining -= c;
                rest -= p(i);
            }
            stat += static_cast<double>(remaining) * s(z - 1);
            const double signed_stat = sign * stat;
            if (signed_stat < 0.0)
                doubled += 2;
            else if (signed_stat == 0.0)
                doubled += 1;
        }
        return doubled;
    };

    constexpr std::size_t kBatch = 8;
    McPoint point{n, 0, 0.0};
    std::size_t doubled_total = 0;
    std::size_t next_chunk = 0;
    const std::size_t target2 = 2 * opt.target_errors;
    while (doubled_total < target2 && point.trials < opt.max_trials) {
        std::vector<std::size_t> batch(kBatch, 0);
        parallel_for(kBatch, opt.jobs, [&](std::size_t b) { batch[b] = run_chunk(next_chunk + b); });
        for (std::size_t b = 0; b < kBatch; ++b) {
            if (doubled_total >= target2 || point.trials >= opt.max_trials) break;
            doubled_total += batch[b];
            point.trials += opt.chunk;
        }
        next_chunk += kBatch;
    }
    point.errors = 0.5 * static_cast<double>(doubled_total);
    return point;
}

McFit fit_curve(std::vector<McPoint> points, std::size_t min_errors) {
    McFit fit;
    for (auto& pt : points) {
        if (pt.errors >= static_cast<double>(min_errors))
            fit.points.push_back(pt);
        else
            ++fit.dropped;
    }
    const auto m = static_cast<Eigen::Index>(fit.points.size());
    if (m < 2) throw Error("budget", "exponent too large for budget: fewer than two grid points observed enough errors");
    const Eigen::Index params = m >= 6 ? 4 : m >= 4 ? 3 : 2;
    double n_max = 0.0;
    for (const auto& pt : fit.points) n_max = std::max(n_max, static_cast<double>(pt.n));
    Eigen::MatrixXd x(m, params);
    Eigen::VectorXd y(m), var(m), trials(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& pt = fit.points[static_cast<std::size_t>(j)];
        const double n = static_cast<double>(pt.n);
        const double phat = pt.errors / static_cast<double>(pt.trials);
        x(j, 0) = 1.0;
        x(j, 1) = -n / n_max;
        if (params >= 3) x(j, 2) = n_max / n;
        if (params >= 4) x(j, 3) = (n_max / n) * (n_max / n);
        // Second-order bias correction of log(phat).
        y(j) = std::log(phat) + (1.0 - phat) / (2.0 * pt.errors) + 0.5 * std::log(n);
        trials(j) = static_cast<double>(pt.trials);
        var(j) = std::max(1.0 - phat, 1e-12) / pt.errors;
    }
    // Variances from the fitted curve rather than the observed counts, so the
    // weights do not correlate with the fluctuations they weigh.
    WlsResult r = weighted_least_squares(x, y, var);
    for (int pass = 0; pass < 3; ++pass) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double n = static_cast<double>(fit.points[static_cast<std::size_t>(j)].n);
            const double pfit = std::clamp(std::exp(x.row(j).dot(r.beta) - 0.5 * std::log(n)), 1e-300, 0.5);
            var(j) = (1.0 - pfit) / (trials(j) * pfit);
        }
        r = weighted_least_squares(x, y, var);
    }
    fit.exponent = r.beta(1) / n_max;
    fit.stderr_exponent = std::sqrt(std::max(0.0, r.cov(1, 1))) / n_max;
    fit.intercept = r.beta(0);
    fit.inverse_n = params >= 3 ? r.beta(2) * n_max : 0.0;
    return fit;
}

}  // namespace

double analytic_pairwise_exponent(const Eigen::MatrixXd& psi, const Eigen::VectorXd& phi1,
                                  const Eigen::VectorXd& phi2, double epsilon) {
    if (psi.rows() != phi1.size() || phi1.size() != phi2.size())
        throw InvalidArgument("analytic_pairwise_exponent: dimension mismatch");
    return epsilon * epsilon / 8.0 * (psi.transpose() * (phi1 - phi2)).squaredNorm();
}

PairExponent least_distinguishable_pair(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& phi, double epsilon) {
    if (phi.cols() < 2) throw InvalidArgument("least_distinguishable_pair: need at least two attribute values");
    PairExponent best{0, 1, std::numeric_limits<double>::infinity()};
    for (Eigen::Index a = 0; a < phi.cols(); ++a)
        for (Eigen::Index b = a + 1; b < phi.cols(); ++b) {
            const double e = analytic_pairwise_exponent(psi, phi.col(a), phi.col(b), epsilon);
            if (e < best.value) best = {static_cast<std::size_t>(a), static_cast<std::size_t>(b), e};
        }
    return best;
}

IProjection iprojection_exponent(const Pmf& p1, const Pmf& p2, const FeatureSet& fs) {
    p1.require_strictly_positive("iprojection_exponent first hypothesis");
    p2.require_strictly_positive("iprojection_exponent second hypothesis");
    const Eigen::VectorXd s = centroid_statistic(p1, p2, fs);
    IProjection out;
    if (s.size() == 0) {
        out.degenerate = true;
        return out;
    }
    out.first = crossing_rate(p1.probs(), s);
    out.second = crossing_rate(p2.probs(), s);
    out.exponent = std::min(out.first, out.second);
    return out;
}

double chernoff_information(const Pmf& p1, const Pmf& p2) {
    p1.require_strictly_positive("chernoff_information first hypothesis");
    p2.require_strictly_positive("chernoff_information second hypothesis");
    if (p1.size() != p2.size()) throw InvalidArgument("chernoff_information: alphabet sizes differ");
    const Eigen::ArrayXd l1 = p1.probs().array().log();
    const Eigen::ArrayXd l2 = p2.probs().array().log();
    const Eigen::ArrayXd llr = l1 - l2;
    auto value = [&](double lam) {
        const Eigen::ArrayXd e = lam * l1 + (1.0 - lam) * l2;
        const double m = e.maxCoeff();
        return m + std::log((e - m).exp().sum());
    };
    auto slope = [&](double lam) {
        const Eigen::ArrayXd e = lam * l1 + (1.0 - lam) * l2;
        const Eigen::ArrayXd w = (e - e.maxCoeff()).exp();
        return (w * llr).sum() / w.sum();
    };
    double lo = 0.0, hi = 1.0;
    if (slope(lo) >= 0.0) return 0.0;
    if (slope(hi) <= 0.0) return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return std::max(0.0, -value(0.5 * (lo + hi)));
}

McCurve mc_error_curve(const Pmf& p1, const Pmf& p2, const FeatureSet& fs, const McOptions& options) {
    if (options.n_grid.empty()) throw InvalidArgument("mc_error_curve: empty sample-size grid");
    if (options.chunk == 0 || options.max_trials == 0) throw InvalidArgument("mc_error_curve: empty trial budget");
    p1.require_strictly_positive("mc_error_curve first hypothesis");
    p2.require_strictly_positive("mc_error_curve second hypothesis");
    const Eigen::VectorXd s = centroid_statistic(p1, p2, fs);
    McCurve curve;
    if (s.size() == 0) {
        curve.degenerate = true;
        return curve;
    }
    std::vector<McPoint> first, second;
    for (std::size_t j = 0; j < options.n_grid.size(); ++j) {
        const std::size_t n = options.n_grid[j];
        if (n == 0) throw InvalidArgument("mc_error_curve: sample sizes must be positive");
        first.push_back(simulate_point(p1.probs(), s, 1.0, n, options, (std::uint64_t{1} << 32) | j));
        second.push_back(simulate_point(p2.probs(), s, -1.0, n, options, (std::uint64_t{2} << 32) | j));
    }
    std::optional<McFit> f1, f2;
    try {
        f1 = fit_curve(std::move(first), options.min_errors);
    } catch (const Error& e) {
        if (e.kind() != "budget") throw;
    }
    try {
        f2 = fit_curve(std::move(second), options.min_errors);
    } catch (const Error& e) {
        if (e.kind() != "budget") throw;
    }
    if (!f1 && !f2)
        throw Error("budget", "exponent too large for budget: no grid point observed enough errors");
    if (f1) curve.first = *f1;
    if (f2) curve.second = *f2;
    const McFit& chosen = !f2 ? *f1 : !f1 ? *f2 : (f1->exponent <= f2->exponent ? *f1 : *f2);
    curve.exponent = chosen.exponent;
    curve.stderr_exponent = chosen.stderr_exponent;
    return curve;
}

std::vector<std::size_t> mc_grid(double exponent, std::size_t points) {
    if (!(exponent > 0.0)) throw InvalidArgument("mc_grid: exponent must be positive");
    std::vector<std::size_t> grid;
    for (std::size_t t = 1; t <= points; ++t)
        grid.push_back(static_cast<std::size_t>(std::ceil(static_cast<double>(t) / exponent)));
    return grid;
}

JointPmf ChainModel::noisy() const { return apply_channels(clean, chan_x, chan_y); }

void ChainModel::validate() const {
    if (chan_x.labels() != clean.x_labels())
        throw InvalidArgument("chain: X channel alphabet does not match the joint's X alphabet");
    if (chan_y.labels() != clean.y_labels())
        throw InvalidArgument("chain: Y channel alphabet does not match the joint's Y alphabet");
    clean.x_marginal().require_strictly_positive("chain X marginal");
    clean.y_marginal().require_strictly_positive("chain Y marginal");
}

double residual_scale(double delta, double eta1, double eta2) {
    return std::max(delta + eta1 + delta * eta1, delta + eta2 + delta * eta2);
}

TheoremBound theorem_bound(double epsilon, std::size_t k, const Eigen::VectorXd& sigmas, double c_u, double c_v,
                           double delta, double eta1, double eta2, double slack) {
    if (k == 0 || k > static_cast<std::size_t>(sigmas.size()))
        throw InvalidArgument("theorem_bound: k must lie in [1, number of singular values]");
    if (delta < 0.0 || eta1 < 0.0 || eta2 < 0.0 || slack < 0.0 || c_u < 0.0 || c_v < 0.0)
        throw InvalidArgument("theorem_bound: constants, delta, eta and slack must be nonnegative");
    const double e2 = epsilon * epsilon;
    const double energy = sigmas.head(static_cast<Eigen::Index>(k)).squaredNorm();
    TheoremBound out;
    out.bound = {c_u * e2 * static_cast<double>(k), c_v * e2 * energy, c_u * e2 * energy,
                 c_v * e2 * static_cast<double>(k)};
    out.residual = slack * e2 * residual_scale(delta, eta1, eta2);
    return out;
}

namespace {

ChainModel reversed(const ChainModel& chain) { return {transposed(chain.clean), chain.chan_y, chain.chan_x}; }

double frobenius_constant(const Eigen::MatrixXd& phi) {
    return phi.squaredNorm() / (4.0 * static_cast<double>(phi.rows()) * static_cast<double>(phi.cols()));
}

void require_feature_base(const FeatureSet& fs, const Pmf& base, const char* what) {
    if (fs.base().labels() != base.labels() || max_abs(fs.base().probs() - base.probs()) > 1e-9)
        throw InvalidArgument(std::string(what) + " features are not normalized on the observed marginal");
}

struct SideSample {
    double same = 0.0;   ///< exponent from the attribute's own observation
    double cross = 0.0;  ///< exponent from the other observation
    double constant = 0.0;
};

// One attribute side: configurations over the clean "x" of `chain`, observed
// through chan_x (own features `own`) and, across the chain, through chan_y
// (features `other`).
SideSample side_sample(const AttributeEnsembleSpec& spec, const ChainModel& chain, std::size_t index,
                       const FeatureSet* own, const FeatureSet* other, bool oracle) {
    const SampledConfiguration drawn = sample_configuration(spec, index);
    const MarkovPushResult push = markov_push(drawn.config, chain.clean, chain.chan_x, chain.chan_y);
    const Eigen::MatrixXd own_phi = information_matrix(push.observed).phi();
    SideSample out;
    out.constant = frobenius_constant(own_phi);
    if (!own) return out;
    const double eps = spec.epsilon;
    auto value = [&](const FeatureSet& fs, const Configuration& cfg, const Eigen::MatrixXd& phi) {
        const PairExponent pair = least_distinguishable_pair(feature_vectors(fs), phi, eps);
        if (!oracle) return pair.value;
        return iprojection_exponent(cfg.conditional(pair.first), cfg.conditional(pair.second), fs).exponent;
    };
    out.same = value(*own, push.observed, own_phi);
    out.cross = value(*other, push.exact, push.exact_phi);
    return out;
}

}  // namespace

TheoremConstants theorem_constants(const AttributeEnsembleSpec& mu_u, const AttributeEnsembleSpec& mu_v,
                                   const ChainModel& chain, std::size_t n_configs, unsigned jobs) {
    chain.validate();
    if (n_configs < 2) throw InvalidArgument("theorem_constants: need at least two configurations");
    const ChainModel rev = reversed(chain);
    std::vector<double> cu(n_configs), cv(n_configs);
    parallel_for(n_configs, jobs, [&](std::size_t i) {
        cu[i] = side_sample(mu_u, chain, i, nullptr, nullptr, false).constant;
        cv[i] = side_sample(mu_v, rev, i, nullptr, nullptr, false).constant;
    });
    return {mean_stderr(cu), mean_stderr(cv)};
}

ExponentReport average_exponents(const AttributeEnsembleSpec& mu_u, const AttributeEnsembleSpec& mu_v,
                                 const ChainModel& chain, const FeatureSet& f, const FeatureSet& g,
                                 const AverageOptions& options) {
    chain.validate();
    if (options.n_configs < 2) throw InvalidArgument("average_exponents: need at least two configurations");
    if (f.k() != g.k()) throw InvalidArgument("average_exponents: f and g must have the same number of features");
    const JointPmf noisy = chain.noisy();
    require_feature_base(f, noisy.x_marginal(), "f");
    require_feature_base(g, noisy.y_marginal(), "g");
    const ChainModel rev = reversed(chain);
    const std::size_t n = options.n_configs;
    std::vector<SideSample> u(n), v(n);
    parallel_for(n, options.jobs, [&](std::size_t i) {
        u[i] = side_sample(mu_u, chain, i, &f, &g, options.oracle);
        v[i] = side_sample(mu_v, rev, i, &g, &f, options.oracle);
    });
    auto collect = [](const std::vector<SideSample>& xs, double SideSample::*field) {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(x.*field);
        return mean_stderr(out);
    };
    ExponentReport r;
    r.e_u_s = collect(u, &SideSample::same);
    r.e_u_t = collect(u, &SideSample::cross);
    r.e_v_t = collect(v, &SideSample::same);
    r.e_v_s = collect(v, &SideSample::cross);
    r.constants = {collect(u, &SideSample::constant), collect(v, &SideSample::constant)};
    r.epsilon = mu_u.epsilon;
    r.k = f.k();
    r.eta1 = chain.chan_x.eta();
    r.eta2 = chain.chan_y.eta();
    r.seed_u = mu_u.seed;
    r.seed_v = mu_v.seed;
    r.n_configs = n;
    r.oracle = options.oracle;
    return r;
}

}  // namespace ufs
