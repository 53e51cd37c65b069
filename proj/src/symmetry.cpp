#include "ufs/symmetry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <utility>

#include "ufs/error.hpp"
#include "ufs/parallel.hpp"
#include "ufs/svd.hpp"

namespace ufs {

namespace {

constexpr std::uint64_t kEnsembleStream = 0xE5;

Eigen::VectorXd kron(const Eigen::VectorXd& v, const Eigen::VectorXd& u) {
    Eigen::VectorXd w(u.size() * v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) w.segment(j * u.size(), u.size()) = v(j) * u;
    return w;
}

double stderr_of(const Eigen::VectorXd& x) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) return 0.0;
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / (n - 1.0) / n);
}

Eigen::VectorXd random_unit(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(n);
    do {
        for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    } while (v.norm() == 0.0);
    return v.normalized();
}

// Extreme eigenpair of a small symmetric matrix.
std::pair<double, Eigen::VectorXd> extreme_eigen(const Eigen::MatrixXd& s, bool largest) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
    const Eigen::Index idx = largest ? s.rows() - 1 : 0;
    Eigen::VectorXd vec = eig.eigenvectors().col(idx);
    apply_sign_convention(vec);
    return {eig.eigenvalues()(idx), std::move(vec)};
}

struct Run {
    RankOneExtremum ext;
    bool converged = false;
};

Run alternate(const SecondMomentForm& form, Eigen::VectorXd v, bool largest, const RankOneOptions& opt) {
    Run run;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < opt.max_iterations; ++it) {
        auto [lu, u] = extreme_eigen(form.left_operator(v), largest);
        auto [lv, vv] = extreme_eigen(form.right_operator(u), largest);
        v = std::move(vv);
        run.ext = {lv, std::move(u), v};
        if (!std::isnan(prev) && std::abs(lv - prev) <= opt.tolerance * std::max(1.0, std::abs(lv))) {
            run.converged = true;
            break;
        }
        prev = lv;
    }
    return run;
}

}  // namespace

// ---------------------------------------------------------------------------

MatrixEnsemble::MatrixEnsemble(Eigen::Index rows, Eigen::Index cols, Sampler sampler, std::uint64_t seed,
                               std::optional<double> declared_delta)
    : rows_(rows), cols_(cols), sampler_(std::move(sampler)), seed_(seed), declared_delta_(declared_delta) {
    if (rows_ <= 0 || cols_ <= 0) throw InvalidArgument("matrix ensemble: dimensions must be positive");
    if (!sampler_) throw InvalidArgument("matrix ensemble: missing sampler");
    if (declared_delta_ && *declared_delta_ < 0.0) throw InvalidArgument("matrix ensemble: declared delta must be >= 0");
}

Eigen::MatrixXd MatrixEnsemble::sample(std::size_t index) const {
    Rng rng = make_rng(seed_, kEnsembleStream, index);
    Eigen::MatrixXd a;
    try {
        a = sampler_(rng);
    } catch (const std::exception& e) {
        throw Error("sampler", "sample " + std::to_string(index) + ": " + e.what());
    }
    if (a.rows() != rows_ || a.cols() != cols_)
        throw Error("sampler", "sample " + std::to_string(index) + ": sampler returned a matrix of the wrong shape");
    return a;
}

MatrixEnsemble MatrixEnsemble::with_seed(std::uint64_t seed) const {
    MatrixEnsemble out = *this;
    out.seed_ = seed;
    return out;
}

MatrixEnsemble MatrixEnsemble::scaled(double c) const {
    auto inner = sampler_;
    std::optional<double> d;
    if (declared_delta_) d = c * c * *declared_delta_;
    return MatrixEnsemble(rows_, cols_, [inner, c](Rng& rng) -> Eigen::MatrixXd { return c * inner(rng); }, seed_, d);
}

MatrixEnsemble MatrixEnsemble::left_multiplied(const Eigen::MatrixXd& b) const {
    if (b.rows() != rows_ || b.cols() != rows_) throw InvalidArgument("left_multiplied: B must be rows x rows");
    auto inner = sampler_;
    return MatrixEnsemble(rows_, cols_, [inner, b](Rng& rng) -> Eigen::MatrixXd { return b * inner(rng); }, seed_);
}

MatrixEnsemble MatrixEnsemble::conjugated(const Eigen::MatrixXd& q1, const Eigen::MatrixXd& q2) const {
    if (q1.rows() != rows_ || q1.cols() != rows_ || q2.rows() != cols_ || q2.cols() != cols_)
        throw InvalidArgument("conjugated: Q1 must be rows x rows and Q2 cols x cols");
    auto inner = sampler_;
    return MatrixEnsemble(
        rows_, cols_, [inner, q1, q2](Rng& rng) -> Eigen::MatrixXd { return q1.transpose() * inner(rng) * q2; }, seed_,
        declared_delta_);
}

MatrixEnsemble MatrixEnsemble::gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    return MatrixEnsemble(
        rows, cols,
        [rows, cols](Rng& rng) -> Eigen::MatrixXd {
            std::normal_distribution<double> nd;
            Eigen::MatrixXd a(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = nd(rng);
            return a;
        },
        seed, 0.0);
}

MatrixEnsemble MatrixEnsemble::example_anisotropic(double sigma2, std::uint64_t seed) {
    if (!(sigma2 > 0.0)) throw InvalidArgument("example_anisotropic: variance must be positive");
    const double sd = std::sqrt(sigma2);
    return MatrixEnsemble(
        2, 2,
        [sd](Rng& rng) -> Eigen::MatrixXd {
            std::normal_distribution<double> nd;
            Eigen::MatrixXd a(2, 2);
            a(0, 0) = sd * nd(rng);
            a(1, 0) = nd(rng);
            a(0, 1) = nd(rng);
            a(1, 1) = nd(rng);
            return a;
        },
        seed, std::abs(sigma2 - 1.0));
}

MatrixEnsemble MatrixEnsemble::rank_one(const Eigen::VectorXd& u, const Eigen::VectorXd& v, std::uint64_t seed) {
    const Eigen::MatrixXd outer = u * v.transpose();
    return MatrixEnsemble(
        u.size(), v.size(),
        [outer](Rng& rng) -> Eigen::MatrixXd {
            std::normal_distribution<double> nd;
            return nd(rng) * outer;
        },
        seed);
}

Eigen::MatrixXd draw_vectorized(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs) {
    const Eigen::Index dim = ens.rows() * ens.cols();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(samples), dim);
    parallel_for(samples, jobs, [&](std::size_t i) {
        const Eigen::MatrixXd a = ens.sample(i);
        out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(a.data(), dim);
    });
    return out;
}

// ---------------------------------------------------------------------------

SecondMomentForm::SecondMomentForm(Eigen::MatrixXd draws, Eigen::Index rows, Eigen::Index cols)
    : draws_(std::move(draws)), rows_(rows), cols_(cols) {
    if (draws_.cols() != rows_ * cols_) throw InvalidArgument("second moment form: draw width must be rows*cols");
    if (draws_.rows() < 2) throw InvalidArgument("second moment form: at least two samples are required");
    // Block partial sums combined in block order keep the result independent of threading.
    constexpr Eigen::Index kBlock = 4096;
    const Eigen::Index dim = rows_ * cols_;
    k_ = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index start = 0; start < draws_.rows(); start += kBlock) {
        const Eigen::Index len = std::min(kBlock, draws_.rows() - start);
        const auto block = draws_.middleRows(start, len);
        k_.noalias() += block.transpose() * block;
    }
    k_ /= static_cast<double>(draws_.rows());
    k_ = 0.5 * (k_ + k_.transpose()).eval();
}

SecondMomentForm SecondMomentForm::exact(Eigen::MatrixXd k, Eigen::Index rows, Eigen::Index cols) {
    if (k.rows() != rows * cols || k.cols() != rows * cols)
        throw InvalidArgument("second moment form: K must be (rows*cols) square");
    SecondMomentForm out(Eigen::MatrixXd::Zero(2, rows * cols), rows, cols);
    out.draws_.resize(0, rows * cols);
    out.k_ = 0.5 * (k + k.transpose());
    return out;
}

double SecondMomentForm::rank_one_moment(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    const Eigen::VectorXd w = kron(v, u);
    return w.dot(k_ * w);
}

double SecondMomentForm::rank_one_stderr(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    if (draws_.rows() < 2) return 0.0;
    const Eigen::VectorXd y = draws_ * kron(v, u);
    return stderr_of(y.array().square().matrix());
}

Eigen::MatrixXd SecondMomentForm::left_operator(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, rows_);
    for (Eigen::Index j = 0; j < cols_; ++j)
        for (Eigen::Index jj = 0; jj < cols_; ++jj)
            out += v(j) * v(jj) * k_.block(j * rows_, jj * rows_, rows_, rows_);
    return out;
}

Eigen::MatrixXd SecondMomentForm::right_operator(const Eigen::VectorXd& u) const {
    Eigen::MatrixXd out(cols_, cols_);
    for (Eigen::Index j = 0; j < cols_; ++j)
        for (Eigen::Index jj = 0; jj < cols_; ++jj)
            out(j, jj) = u.dot(k_.block(j * rows_, jj * rows_, rows_, rows_) * u);
    return out;
}

SecondMomentForm second_moment_form(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs) {
    if (samples < 2) throw InvalidArgument("second_moment_form: at least two samples are required");
    return SecondMomentForm(draw_vectorized(ens, samples, jobs), ens.rows(), ens.cols());
}

// ---------------------------------------------------------------------------

RankOneRange rank_one_range(const SecondMomentForm& form, const RankOneOptions& options) {
    const Eigen::Index m = form.cols();
    std::vector<Eigen::VectorXd> starts;
    for (Eigen::Index j = 0; j < m; ++j) starts.push_back(Eigen::VectorXd::Unit(m, j));
    for (int r = 0; r < options.restarts; ++r) {
        Rng rng = make_rng(options.seed, 0xA17, static_cast<std::uint64_t>(r));
        starts.push_back(random_unit(m, rng));
    }
    RankOneRange out;
    bool have_max = false;
    bool have_min = false;
    bool max_converged = false;
    bool min_converged = false;
    for (const auto& start : starts) {
        Run hi = alternate(form, start, true, options);
        if (!have_max || hi.ext.value > out.max.value) {
            out.max = std::move(hi.ext);
            max_converged = hi.converged;
            have_max = true;
        }
        Run lo = alternate(form, start, false, options);
        if (!have_min || lo.ext.value < out.min.value) {
            out.min = std::move(lo.ext);
            min_converged = lo.converged;
            have_min = true;
        }
    }
    out.unconverged = !(max_converged && min_converged);
    return out;
}

DeltaEstimate delta_from_form(const SecondMomentForm& form, const RankOneOptions& options) {
    DeltaEstimate out;
    out.range = rank_one_range(form, options);
    out.delta = out.range.max.value - out.range.min.value;
    const double se_max = form.rank_one_stderr(out.range.max.u, out.range.max.v);
    const double se_min = form.rank_one_stderr(out.range.min.u, out.range.min.v);
    out.margin = 3.0 * std::sqrt(se_max * se_max + se_min * se_min);
    out.alpha = form.alpha();
    out.samples = form.sample_count();
    return out;
}

DeltaEstimate delta_estimate(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs,
                             const RankOneOptions& options) {
    return delta_from_form(second_moment_form(ens, samples, jobs), options);
}

// ---------------------------------------------------------------------------

Lemma1Report lemma1_report(const MatrixEnsemble& ens, std::size_t samples, unsigned jobs) {
    if (samples < 2) throw InvalidArgument("lemma1_report: at least two samples are required");
    const Eigen::MatrixXd s = draw_vectorized(ens, samples, jobs);
    const Eigen::Index dim = s.cols();
    Lemma1Report rep;
    rep.samples = samples;

    const Eigen::RowVectorXd mean = s.colwise().mean();
    Eigen::Index arg = 0;
    rep.mean_norm.value = mean.cwiseAbs().maxCoeff(&arg);
    double max_se = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) max_se = std::max(max_se, stderr_of(s.col(j)));
    rep.mean_norm.bar = 3.0 * max_se;

    const Eigen::MatrixXd sq = s.array().square().matrix();
    const Eigen::RowVectorXd second = sq.colwise().mean();
    Eigen::Index arg_hi = 0;
    Eigen::Index arg_lo = 0;
    const double hi = second.maxCoeff(&arg_hi);
    const double lo = second.minCoeff(&arg_lo);
    rep.max_moment_spread.value = hi - lo;
    const double se_hi = stderr_of(sq.col(arg_hi));
    const double se_lo = stderr_of(sq.col(arg_lo));
    rep.max_moment_spread.bar = 3.0 * std::sqrt(se_hi * se_hi + se_lo * se_lo);

    const Eigen::MatrixXd centered = s.rowwise() - mean;
    for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = a + 1; b < dim; ++b) {
            const Eigen::VectorXd prod = centered.col(a).cwiseProduct(centered.col(b));
            const double cov = std::abs(prod.mean());
            if (cov >= rep.max_cross_covariance.value) {
                rep.max_cross_covariance.value = cov;
                rep.max_cross_covariance.bar = 3.0 * stderr_of(prod);
            }
        }
    }
    return rep;
}

Lemma4Result lemma4_check(const MatrixEnsemble& ens, const Eigen::MatrixXd& g, const Eigen::MatrixXd& h, double delta,
                          std::size_t samples, unsigned jobs) {
    if (g.rows() != ens.rows() || h.rows() != ens.cols())
        throw InvalidArgument("lemma4_check: G must have n rows and H must have m rows");
    if (samples < 2) throw InvalidArgument("lemma4_check: at least two samples are required");
    const double gh = g.squaredNorm() * h.squaredNorm();
    const double scale = gh / static_cast<double>(ens.rows() * ens.cols());
    Eigen::VectorXd d(static_cast<Eigen::Index>(samples));
    parallel_for(samples, jobs, [&](std::size_t i) {
        const Eigen::MatrixXd a = ens.sample(i);
        d(static_cast<Eigen::Index>(i)) = (g.transpose() * a * h).squaredNorm() - scale * a.squaredNorm();
    });
    Lemma4Result out;
    out.lhs = std::abs(d.mean());
    out.margin = 3.0 * stderr_of(d);
    out.bound = 2.0 * gh * delta + out.margin;
    out.pass = out.lhs <= out.bound;
    return out;
}

double gamma_propagation(const Eigen::MatrixXd& b, double delta, double alpha) {
    if (b.rows() != b.cols()) throw InvalidArgument("gamma_propagation: B must be square");
    if (delta < 0.0 || alpha < 0.0) throw InvalidArgument("gamma_propagation: delta and alpha must be nonnegative");
    const Eigen::VectorXd s = jacobi_svd(b).sigma;
    const double s1 = s(0) * s(0);
    const double sn = s(s.size() - 1) * s(s.size() - 1);
    return (alpha + delta) * (s1 - sn) + s1 * delta;
}

PropagationResult propagation_check(const MatrixEnsemble& ens, const Eigen::MatrixXd& b, std::size_t samples,
                                    unsigned jobs, const RankOneOptions& options) {
    PropagationResult out;
    out.delta_in = delta_estimate(ens, samples, jobs, options);
    out.delta_out = delta_estimate(ens.left_multiplied(b), samples, jobs, options);
    out.gamma_bound = gamma_propagation(b, out.delta_in.delta, out.delta_in.alpha);
    const Eigen::VectorXd s = jacobi_svd(b).sigma;
    const double s1 = s(0) * s(0);
    const double sn = s(s.size() - 1) * s(s.size() - 1);
    out.margin = out.delta_out.margin + ((s1 - sn) + s1) * out.delta_in.margin;
    out.pass = out.delta_out.delta <= out.gamma_bound + out.margin;
    return out;
}

}  // namespace ufs
