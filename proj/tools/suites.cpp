#include "suites.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ufs/dependence.hpp"
#include "ufs/ensemble.hpp"
#include "ufs/random.hpp"
#include "ufs/symmetry.hpp"

namespace ufs::suites {

namespace {

constexpr std::uint64_t kJointStream = 0xA1;
constexpr std::uint64_t kBilinearStream = 0xA4;
constexpr std::uint64_t kPropagationStream = 0xA5;
constexpr std::uint64_t kChannelStream = 0xA6;

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    return buf;
}

Pmf random_pmf(std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::VectorXd p(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = u(rng);
    return Pmf(p / p.sum());
}

JointPmf suite_joint(std::uint64_t seed, std::size_t index) {
    Rng rng = make_rng(seed, kJointStream, index);
    std::uniform_int_distribution<int> dim(2, 8);
    const int nx = dim(rng);
    const int ny = dim(rng);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(ny, nx);
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = u(rng);
    return JointPmf(p / p.sum());
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd a(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) a(i, j) = nd(rng);
    return a;
}

// Mixes three families: independent entries with unequal variances, the 2 x 2
// anisotropic example, and projected information ensembles.
MatrixEnsemble random_ensemble(std::size_t index, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::uint64_t seed = rng();
    switch (index % 3) {
        case 0: {
            std::uniform_int_distribution<int> dim(2, 4);
            const int n = dim(rng);
            const int m = dim(rng);
            Eigen::MatrixXd sd(n, m);
            for (Eigen::Index j = 0; j < m; ++j)
                for (Eigen::Index i = 0; i < n; ++i) sd(i, j) = 0.7 + 0.6 * u(rng);
            return MatrixEnsemble(
                n, m,
                [sd](Rng& r) -> Eigen::MatrixXd {
                    std::normal_distribution<double> nd;
                    Eigen::MatrixXd a(sd.rows(), sd.cols());
                    for (Eigen::Index j = 0; j < a.cols(); ++j)
                        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = sd(i, j) * nd(r);
                    return a;
                },
                seed);
        }
        case 1:
            return MatrixEnsemble::example_anisotropic(0.5 + 1.5 * u(rng), seed);
        default: {
            AttributeEnsembleSpec spec{Pmf::uniform(4), Pmf::uniform(3)};
            spec.anisotropy = u(rng);
            spec.seed = seed;
            return information_ensemble(spec);
        }
    }
}

SuiteResult named(std::string name) {
    SuiteResult r;
    r.name = std::move(name);
    return r;
}

SuiteResult finish(SuiteResult r) {
    r.pass = r.failures == 0 && r.cases > 0;
    return r;
}

}  // namespace

SuiteResult canonical_identities(const SuiteSizes& sizes) {
    SuiteResult r = named("canonical-matrix identities");
    double worst_null = 0.0, worst_sigma = 0.0, worst_oracle = 0.0, worst_product = 0.0;
    for (std::size_t i = 0; i < sizes.joints; ++i) {
        const JointPmf joint = suite_joint(sizes.seed, i);
        const CdmMatrix cdm(joint);
        const Eigen::MatrixXd& b = cdm.matrix();
        const double null_x = max_abs(b * joint.x_marginal().sqrt_probs());
        const double null_y = max_abs(b.transpose() * joint.y_marginal().sqrt_probs());
        const Eigen::VectorXd& s = cdm.singular_values();

        // Oracle: Eigen's divide-and-conquer SVD of the entrywise formula.
        Eigen::MatrixXd formula(b.rows(), b.cols());
        const Eigen::VectorXd& px = joint.x_marginal().probs();
        const Eigen::VectorXd& py = joint.y_marginal().probs();
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            for (Eigen::Index x = 0; x < b.cols(); ++x)
                formula(j, x) = (joint.probs()(j, x) - px(x) * py(j)) / std::sqrt(px(x) * py(j));
        const Eigen::BDCSVD<Eigen::MatrixXd> oracle(formula);
        const double sigma_err = (s - oracle.singularValues()).cwiseAbs().maxCoeff();
        const Eigen::MatrixXd rebuilt = cdm.left_vectors() * s.asDiagonal() * cdm.right_vectors().transpose();
        const double rebuild_err = max_abs(rebuilt - formula);

        const double sigma_out = std::max(-s.minCoeff(), s.maxCoeff() - 1.0);
        worst_null = std::max({worst_null, null_x, null_y});
        worst_sigma = std::max(worst_sigma, sigma_out);
        worst_oracle = std::max({worst_oracle, sigma_err, rebuild_err});
        ++r.cases;
        if (null_x > 1e-10 || null_y > 1e-10 || s.minCoeff() < 0.0 || s.maxCoeff() > 1.0 + 1e-10 ||
            sigma_err > 1e-10 || rebuild_err > 1e-10)
            ++r.failures;

        // Product of the two marginals: zero up to the rounding of the marginal sums.
        const CdmMatrix prod(JointPmf::product(joint.x_marginal(), joint.y_marginal()));
        worst_product = std::max(worst_product, max_abs(prod.matrix()));
        ++r.cases;
        if (max_abs(prod.matrix()) > 1e-15 || prod.singular_values().maxCoeff() > 1e-15) ++r.failures;
    }
    // Dyadic marginals make every product and sum exact, so Btilde is exactly zero.
    const CdmMatrix dyadic(JointPmf::product(Pmf(Eigen::Vector4d(0.5, 0.25, 0.125, 0.125)),
                                             Pmf(Eigen::Vector3d(0.25, 0.5, 0.25))));
    ++r.cases;
    if (!(dyadic.matrix().array() == 0.0).all() || !(dyadic.singular_values().array() == 0.0).all()) ++r.failures;
    r.detail = format("null %.2e, sigma overshoot %.2e, oracle %.2e", worst_null, std::max(0.0, worst_sigma),
                      worst_oracle) +
               format(", product %.2e, dyadic ", worst_product) +
               ((dyadic.matrix().array() == 0.0).all() ? "exact" : "nonzero");
    return finish(r);
}

SuiteResult feature_normalization(const SuiteSizes& sizes) {
    SuiteResult r = named("feature normalization");
    double worst_mean = 0.0, worst_gram = 0.0;
    for (std::size_t i = 0; i < sizes.joints; ++i) {
        const JointPmf joint = suite_joint(sizes.seed, i);
        const CdmMatrix cdm(joint);
        for (std::size_t k = 1; k < cdm.rank_bound(); ++k) {
            const FeatureSelection sel = select_features(cdm, k);
            for (const FeatureSet* fs : {&sel.f, &sel.g}) {
                const Eigen::VectorXd& p = fs->base().probs();
                const Eigen::MatrixXd& h = fs->values();
                const double mean = (h.transpose() * p).cwiseAbs().maxCoeff();
                const Eigen::MatrixXd gram = h.transpose() * p.asDiagonal() * h;
                const double gram_err =
                    max_abs(gram - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
                worst_mean = std::max(worst_mean, mean);
                worst_gram = std::max(worst_gram, gram_err);
                ++r.cases;
                if (mean > 1e-10 || gram_err > 1e-8) ++r.failures;
            }
        }
    }
    r.detail = format("max |E[f]| %.2e, max |E[ff^T] - I| %.2e", worst_mean, worst_gram);
    return finish(r);
}

SuiteResult anisotropic_example(const SuiteSizes& sizes) {
    SuiteResult r = named("anisotropic 2x2 example");
    const MatrixEnsemble ens = MatrixEnsemble::example_anisotropic(1.5, sizes.seed);
    const DeltaEstimate d = delta_estimate(ens, sizes.example_samples, sizes.jobs);
    const Lemma1Report l1 = lemma1_report(ens, sizes.example_samples, sizes.jobs);
    r.cases = 4;
    if (std::abs(d.delta - 0.5) > 0.05) ++r.failures;
    if (std::abs(l1.max_moment_spread.value - 0.5) > 0.05 || l1.max_moment_spread.within_bar_of_zero()) ++r.failures;
    if (!l1.mean_norm.within_bar_of_zero()) ++r.failures;
    if (!l1.max_cross_covariance.within_bar_of_zero()) ++r.failures;
    r.detail = format("delta %.4f (target 0.5 +- 0.05), moment spread %.4f, ", d.delta, l1.max_moment_spread.value) +
               format("mean %.4f (bar %.4f), ", l1.mean_norm.value, l1.mean_norm.bar) +
               format("cross covariance %.4f (bar %.4f)", l1.max_cross_covariance.value, l1.max_cross_covariance.bar);
    return finish(r);
}

SuiteResult bilinear_bound_suite(const SuiteSizes& sizes) {
    SuiteResult r = named("bilinear moment bound");
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < sizes.bilinear_triples; ++t) {
        Rng rng = make_rng(sizes.seed, kBilinearStream, t);
        const MatrixEnsemble ens = random_ensemble(t, rng);
        const Eigen::Index rank = 1 + static_cast<Eigen::Index>(rng() % 2);
        const Eigen::MatrixXd g = gaussian(ens.rows(), rank, rng);
        const Eigen::MatrixXd h = gaussian(ens.cols(), rank, rng);
        // delta is estimated first, on draws independent of the check's.
        const double delta = delta_estimate(ens.with_seed(rng()), sizes.ensemble_samples, sizes.jobs).delta;
        const Lemma4Result res = lemma4_check(ens, g, h, delta, sizes.ensemble_samples, sizes.jobs);
        worst_ratio = std::max(worst_ratio, res.lhs / res.bound);
        ++r.cases;
        if (!res.pass) ++r.failures;
    }
    r.detail = format("%.0f/%.0f within bound, worst lhs/bound %.3f", static_cast<double>(r.cases - r.failures),
                      static_cast<double>(r.cases), worst_ratio);
    return finish(r);
}

SuiteResult propagation_suite(const SuiteSizes& sizes) {
    SuiteResult r = named("symmetry propagation");
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < sizes.propagation_pairs; ++t) {
        Rng rng = make_rng(sizes.seed, kPropagationStream, t);
        const MatrixEnsemble ens = random_ensemble(t, rng);
        const Eigen::Index n = ens.rows();
        const Eigen::MatrixXd b =
            t == 0 ? Eigen::MatrixXd::Identity(n, n) : Eigen::MatrixXd(gaussian(n, n, rng) / std::sqrt(double(n)));
        const PropagationResult res = propagation_check(ens, b, sizes.ensemble_samples, sizes.jobs);
        ++r.cases;
        bool ok = res.pass;
        if (t == 0) {
            // B = I: gamma collapses to delta and the output ensemble is the input one.
            ok = ok && std::abs(res.gamma_bound - res.delta_in.delta) <= 1e-12 &&
                 std::abs(res.delta_out.delta - res.delta_in.delta) <= res.margin;
        }
        worst_ratio = std::max(worst_ratio, res.delta_out.delta / (res.gamma_bound + res.margin));
        if (!ok) ++r.failures;
    }
    r.detail = format("%.0f/%.0f within gamma + margin, worst ratio %.3f", static_cast<double>(r.cases - r.failures),
                      static_cast<double>(r.cases), worst_ratio);
    return finish(r);
}

SuiteResult channel_spectrum(const SuiteSizes& sizes) {
    SuiteResult r = named("channel spectrum scaling");
    const std::vector<double> etas{0.01, 0.02, 0.04, 0.08};
    auto slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += std::log(xs[i]) / double(xs.size());
            my += std::log(ys[i]) / double(xs.size());
        }
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
            sxx += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
        }
        return sxy / sxx;
    };
    for (std::size_t n : {std::size_t{2}, std::size_t{4}}) {
        Rng rng = make_rng(sizes.seed, kChannelStream, n);
        const Pmf input = random_pmf(n, rng);
        std::vector<double> ranges;
        for (double eta : etas)
            ranges.push_back(UncenteredB(Channel::make(Channel::symmetric_perturbation(n), eta), input).spectral_range());
        const double s_range = slope(etas, ranges);

        Eigen::MatrixXd p(n, n);
        std::uniform_real_distribution<double> u(0.05, 1.0);
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = u(rng);
        const JointPmf clean(p / p.sum());
        AttributeEnsembleSpec spec{clean.x_marginal(), Pmf::uniform(3)};
        spec.seed = rng();
        const Configuration config = sample_configuration(spec, 0).config;
        const double at_zero =
            markov_push(config, clean, Channel::identity(clean.x_labels()), Channel::identity(clean.y_labels()))
                .residual_norm;
        std::vector<double> residuals;
        for (double eta : etas) {
            const Channel ch = Channel::make(Channel::symmetric_perturbation(n), eta);
            residuals.push_back(markov_push(config, clean, ch, ch).residual_norm);
        }
        const double s_res = slope(etas, residuals);
        r.cases += 3;
        if (std::abs(s_range - 1.0) > 0.2) ++r.failures;
        if (std::abs(s_res - 1.0) > 0.2) ++r.failures;
        if (at_zero > 1e-12) ++r.failures;
        if (!r.detail.empty()) r.detail += "; ";
        r.detail += format("|X|=%.0f: spectrum slope %.3f, push residual slope %.3f", double(n), s_range, s_res) +
                    format(", residual at eta=0 %.1e", at_zero);
    }
    return finish(r);
}

std::vector<SuiteResult> run_all(const SuiteSizes& sizes) {
    return {canonical_identities(sizes), feature_normalization(sizes), anisotropic_example(sizes),
            bilinear_bound_suite(sizes),         propagation_suite(sizes),     channel_spectrum(sizes)};
}

}  // namespace ufs::suites
