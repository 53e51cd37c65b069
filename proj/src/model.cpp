#include "ufs/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ufs/error.hpp"

namespace ufs {

namespace {

void check_labels(const Labels& labels, Eigen::Index expected, std::string_view what) {
    if (static_cast<Eigen::Index>(labels.size()) != expected) {
        std::ostringstream os;
        os << what << ": " << labels.size() << " labels for " << expected << " symbols";
        throw InvalidArgument(os.str());
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) throw InvalidArgument(std::string(what) + ": duplicate label '" + l + "'");
    }
}

Labels or_index_labels(Labels labels, std::size_t n) {
    return labels.empty() ? index_labels(n) : std::move(labels);
}

std::unordered_map<std::string, Eigen::Index> label_index(const Labels& labels) {
    std::unordered_map<std::string, Eigen::Index> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out.emplace(labels[i], static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace

Labels index_labels(std::size_t n) {
    Labels out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
}

// ---------------------------------------------------------------------------
// Pmf

Pmf::Pmf(Labels labels, Eigen::VectorXd probs) : labels_(std::move(labels)), probs_(std::move(probs)) {
    if (probs_.size() == 0) throw InvalidArgument("pmf: empty alphabet");
    check_labels(labels_, probs_.size(), "pmf");
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        if (!std::isfinite(probs_(i)) || probs_(i) < 0.0)
            throw InvalidArgument("pmf: negative or non-finite probability at symbol '" + labels_[i] + "'");
    }
    const double total = probs_.sum();
    if (std::abs(total - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "pmf: total mass " << total << " differs from 1";
        throw InvalidArgument(os.str());
    }
}

Pmf::Pmf(Eigen::VectorXd probs) : Pmf(index_labels(static_cast<std::size_t>(probs.size())), Eigen::VectorXd(probs)) {}

Pmf Pmf::uniform(std::size_t n) { return uniform(index_labels(n)); }

Pmf Pmf::uniform(Labels labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    return Pmf(std::move(labels), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

bool Pmf::strictly_positive() const noexcept { return probs_.minCoeff() > 0.0; }

void Pmf::require_strictly_positive(std::string_view what) const {
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        if (!(probs_(i) > 0.0))
            throw InvalidArgument(std::string(what) + ": zero probability for symbol '" + labels_[i] + "'");
    }
}

Pmf Pmf::smoothed(double alpha) const {
    if (alpha < 0.0) throw InvalidArgument("smoothing parameter must be nonnegative");
    if (alpha == 0.0) return *this;
    const double n = static_cast<double>(probs_.size());
    Eigen::VectorXd p = (probs_.array() + alpha) / (1.0 + n * alpha);
    return Pmf(labels_, p / p.sum());
}

// ---------------------------------------------------------------------------
// JointPmf

JointPmf::JointPmf(Labels x_labels, Labels y_labels, Eigen::MatrixXd probs)
    : probs_(std::move(probs)),
      x_marginal_(or_index_labels(std::move(x_labels), static_cast<std::size_t>(probs_.cols())),
                  [&] {
                      if (probs_.size() == 0) throw InvalidArgument("joint: empty alphabet");
                      if ((probs_.array() < 0.0).any() || !probs_.allFinite())
                          throw InvalidArgument("joint: negative or non-finite probability");
                      return Eigen::VectorXd(probs_.colwise().sum().transpose());
                  }()),
      y_marginal_(or_index_labels(std::move(y_labels), static_cast<std::size_t>(probs_.rows())),
                  Eigen::VectorXd(probs_.rowwise().sum())) {}

JointPmf::JointPmf(Eigen::MatrixXd probs) : JointPmf(Labels{}, Labels{}, std::move(probs)) {}

Eigen::MatrixXd JointPmf::y_given_x() const {
    x_marginal_.require_strictly_positive("joint x-marginal");
    return probs_ * x_marginal_.probs().cwiseInverse().asDiagonal();
}

Eigen::MatrixXd JointPmf::x_given_y() const {
    y_marginal_.require_strictly_positive("joint y-marginal");
    return probs_.transpose() * y_marginal_.probs().cwiseInverse().asDiagonal();
}

JointPmf JointPmf::smoothed(double alpha) const {
    if (alpha < 0.0) throw InvalidArgument("smoothing parameter must be nonnegative");
    if (alpha == 0.0) return *this;
    Eigen::MatrixXd p = probs_.array() + alpha;
    return JointPmf(x_labels(), y_labels(), p / p.sum());
}

JointPmf JointPmf::product(const Pmf& px, const Pmf& py) {
    return JointPmf(px.labels(), py.labels(), py.probs() * px.probs().transpose());
}

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(Labels labels, Eigen::MatrixXd perturbation, double eta, Eigen::MatrixXd transition)
    : labels_(std::move(labels)),
      perturbation_(std::move(perturbation)),
      eta_(eta),
      transition_(std::move(transition)) {}

double Channel::max_feasible_eta(const Eigen::MatrixXd& t) {
    double bound = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            const double v = t(r, c);
            if (v == 0.0) continue;
            if (r == c) {
                // 1 + eta*v must stay in [0, 1]
                bound = std::min(bound, v > 0.0 ? 0.0 : 1.0 / -v);
            } else {
                // eta*v must stay in [0, 1]
                bound = std::min(bound, v < 0.0 ? 0.0 : 1.0 / v);
            }
        }
    }
    return bound;
}

Channel Channel::make(Eigen::MatrixXd t, double eta, Labels labels) {
    if (t.rows() != t.cols() || t.rows() == 0) throw InvalidArgument("channel: perturbation matrix must be square");
    if (!t.allFinite()) throw InvalidArgument("channel: non-finite perturbation entry");
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("channel: eta must be a finite nonnegative number");
    labels = or_index_labels(std::move(labels), static_cast<std::size_t>(t.rows()));
    check_labels(labels, t.rows(), "channel");
    const double scale = std::max(1.0, max_abs(t));
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
        if (std::abs(t.col(c).sum()) > kMassTolerance * scale) {
            throw InvalidArgument("channel: column " + std::to_string(c) + " of the perturbation does not sum to zero");
        }
    }
    const double bound = max_feasible_eta(t);
    if (eta > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(17);
        os << "eta exceeds feasibility bound: eta = " << eta << ", max feasible eta = " << bound;
        throw FeasibilityError(os.str(), bound);
    }
    const auto n = t.rows();
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) + eta * t;
    p = p.cwiseMax(0.0).cwiseMin(1.0);  // clears rounding at the boundary eta
    return Channel(std::move(labels), std::move(t), eta, std::move(p));
}

Channel Channel::from_matrix(const Eigen::MatrixXd& transition, Labels labels) {
    if (transition.rows() != transition.cols() || transition.rows() == 0)
        throw InvalidArgument("channel: transition matrix must be square");
    if ((transition.array() < 0.0).any() || (transition.array() > 1.0).any())
        throw InvalidArgument("channel: transition entries must lie in [0, 1]");
    for (Eigen::Index c = 0; c < transition.cols(); ++c) {
        if (std::abs(transition.col(c).sum() - 1.0) > kMassTolerance)
            throw InvalidArgument("channel: column " + std::to_string(c) + " does not sum to one");
    }
    const auto n = transition.rows();
    const Eigen::MatrixXd d = transition - Eigen::MatrixXd::Identity(n, n);
    const double eta = max_abs(d);
    Eigen::MatrixXd t = eta > 0.0 ? Eigen::MatrixXd(d / eta) : Eigen::MatrixXd::Zero(n, n);
    labels = or_index_labels(std::move(labels), static_cast<std::size_t>(n));
    check_labels(labels, n, "channel");
    return Channel(std::move(labels), std::move(t), eta, transition);
}

Channel Channel::identity(Labels labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    return make(Eigen::MatrixXd::Zero(n, n), 0.0, std::move(labels));
}

Eigen::MatrixXd Channel::symmetric_perturbation(std::size_t n) {
    if (n < 2) throw InvalidArgument("symmetric perturbation needs at least two symbols");
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(n - 1));
    t.diagonal().setConstant(-1.0);
    return t;
}

Pmf Channel::apply(const Pmf& input) const {
    if (input.labels() != labels_) throw InvalidArgument("channel: input alphabet does not match channel alphabet");
    Eigen::VectorXd out = transition_ * input.probs();
    return Pmf(labels_, out / out.sum());
}

// ---------------------------------------------------------------------------
// Operations

JointPmf joint_from_samples(std::span<const SamplePair> pairs, std::optional<Labels> x_alphabet,
                            std::optional<Labels> y_alphabet) {
    if (pairs.empty()) throw InvalidArgument("joint_from_samples: empty sample stream");
    const bool infer_x = !x_alphabet.has_value();
    const bool infer_y = !y_alphabet.has_value();
    Labels xs = infer_x ? Labels{} : std::move(*x_alphabet);
    Labels ys = infer_y ? Labels{} : std::move(*y_alphabet);
    auto x_index = label_index(xs);
    auto y_index = label_index(ys);
    if (x_index.size() != xs.size() || y_index.size() != ys.size())
        throw InvalidArgument("joint_from_samples: declared alphabet has duplicate labels");

    std::vector<std::pair<Eigen::Index, Eigen::Index>> coded;
    coded.reserve(pairs.size());
    auto lookup = [](auto& index, Labels& labels, bool infer, const std::string& label, std::size_t record,
                     const char* axis) -> Eigen::Index {
        auto it = index.find(label);
        if (it != index.end()) return it->second;
        if (!infer) {
            throw InvalidArgument("joint_from_samples: record " + std::to_string(record) + ": unknown " + axis +
                                  " label '" + label + "'");
        }
        const auto id = static_cast<Eigen::Index>(labels.size());
        labels.push_back(label);
        index.emplace(label, id);
        return id;
    };
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto xi = lookup(x_index, xs, infer_x, pairs[r].first, r, "x");
        const auto yi = lookup(y_index, ys, infer_y, pairs[r].second, r, "y");
        coded.emplace_back(xi, yi);
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ys.size()),
                                                   static_cast<Eigen::Index>(xs.size()));
    for (auto [xi, yi] : coded) counts(yi, xi) += 1.0;
    counts /= static_cast<double>(pairs.size());
    return JointPmf(std::move(xs), std::move(ys), std::move(counts));
}

std::vector<SamplePair> draw_samples(const JointPmf& joint, std::size_t count, Rng& rng) {
    const auto& p = joint.probs();
    std::vector<double> weights(p.data(), p.data() + p.size());  // column-major: index = y + |Y| * x
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
    std::vector<SamplePair> out;
    out.reserve(count);
    const auto rows = static_cast<std::size_t>(p.rows());
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t cell = dist(rng);
        out.emplace_back(joint.x_labels()[cell / rows], joint.y_labels()[cell % rows]);
    }
    return out;
}

JointPmf apply_channels(const JointPmf& joint, const Channel& chan_x, const Channel& chan_y) {
    if (chan_x.labels() != joint.x_labels())
        throw InvalidArgument("apply_channels: x channel alphabet does not match the joint");
    if (chan_y.labels() != joint.y_labels())
        throw InvalidArgument("apply_channels: y channel alphabet does not match the joint");
    Eigen::MatrixXd out = chan_y.matrix() * joint.probs() * chan_x.matrix().transpose();
    return JointPmf(joint.x_labels(), joint.y_labels(), std::move(out));
}

Eigen::MatrixXd reverse_channel(const Channel& chan, const Pmf& input) {
    if (input.labels() != chan.labels()) throw InvalidArgument("reverse_channel: input alphabet mismatch");
    input.require_strictly_positive("reverse_channel input");
    const Eigen::VectorXd out = chan.matrix() * input.probs();
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (!(out(i) > 0.0))
            throw InvalidArgument("reverse_channel: zero output probability for symbol '" + chan.labels()[i] + "'");
    }
    return input.probs().asDiagonal() * chan.matrix().transpose() * out.cwiseInverse().asDiagonal();
}

}  // namespace ufs
