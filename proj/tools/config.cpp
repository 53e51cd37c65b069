#include "config.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ufs/dependence.hpp"
#include "ufs/io.hpp"
#include "ufs/random.hpp"

namespace ufs::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kGeneratorStream = 0x6E4;

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError(path, path + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(path + "." + key, "unknown key " + path + "." + key);
}

template <class T>
T get(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key, path + "." + key + " has the wrong type");
    }
}

double positive(double v, const std::string& path) {
    if (!(v > 0.0)) throw ConfigError(path, path + " must be positive");
    return v;
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

JointSource parse_joint(const json& j, const fs::path& dir) {
    allow_keys(j, "chain.joint", {"file", "generator"});
    JointSource out;
    if (j.contains("file")) out.file = resolve(dir, get<std::string>(j, "chain.joint", "file", ""));
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        allow_keys(g, "chain.joint.generator", {"x_size", "y_size", "seed"});
        out.x_size = get<std::size_t>(g, "chain.joint.generator", "x_size", 4);
        out.y_size = get<std::size_t>(g, "chain.joint.generator", "y_size", 4);
        out.seed = get<std::uint64_t>(g, "chain.joint.generator", "seed", 0);
        if (out.x_size < 2 || out.y_size < 2)
            throw ConfigError("chain.joint.generator", "generated alphabets need at least two symbols");
    }
    if (out.file && j.contains("generator"))
        throw ConfigError("chain.joint", "give either chain.joint.file or chain.joint.generator, not both");
    return out;
}

ChannelSource parse_channel(const json& j, const std::string& path, const fs::path& dir) {
    allow_keys(j, path, {"kind", "file"});
    ChannelSource out;
    out.kind = get<std::string>(j, path, "kind", "symmetric");
    if (out.kind == "file") {
        if (!j.contains("file")) throw ConfigError(path + ".file", path + ".file is required for kind 'file'");
        out.file = resolve(dir, get<std::string>(j, path, "file", ""));
    } else if (out.kind != "identity" && out.kind != "symmetric") {
        throw ConfigError(path + ".kind", path + ".kind must be identity, symmetric or file");
    }
    return out;
}

EnsembleSource parse_ensemble(const json& j, const std::string& path) {
    allow_keys(j, path, {"w_size", "prior", "rho", "rejection_cap"});
    EnsembleSource out;
    out.w_size = get<std::size_t>(j, path, "w_size", 3);
    if (j.contains("prior")) out.prior = get<std::vector<double>>(j, path, "prior", {});
    out.rho = get<double>(j, path, "rho", 1.0);
    out.rejection_cap = get<std::size_t>(j, path, "rejection_cap", 1000);
    if (out.prior) {
        if (out.prior->size() != out.w_size)
            throw ConfigError(path + ".prior", path + ".prior must have w_size entries");
        double sum = 0.0;
        for (double p : *out.prior) {
            if (!(p > 0.0)) throw ConfigError(path + ".prior", path + ".prior must be strictly positive");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-10) throw ConfigError(path + ".prior", path + ".prior must sum to 1");
    }
    if (out.w_size < 2) throw ConfigError(path + ".w_size", path + ".w_size must be at least 2");
    if (!(out.rho > 0.0 && out.rho <= 1.0)) throw ConfigError(path + ".rho", path + ".rho must lie in (0, 1]");
    return out;
}

template <class T>
std::vector<T> nonempty_list(const json& j, const std::string& path, const char* key, std::vector<T> fallback) {
    std::vector<T> v = get<std::vector<T>>(j, path, key, std::move(fallback));
    if (v.empty()) throw ConfigError(path + "." + key, path + "." + key + " must not be empty");
    return v;
}

SweepGrid parse_sweep(const json& j) {
    allow_keys(j, "sweep", {"epsilon", "k", "eta1", "eta2", "s"});
    SweepGrid out;
    out.epsilon = nonempty_list<double>(j, "sweep", "epsilon", out.epsilon);
    out.k = nonempty_list<std::size_t>(j, "sweep", "k", out.k);
    out.eta1 = nonempty_list<double>(j, "sweep", "eta1", out.eta1);
    out.eta2 = nonempty_list<double>(j, "sweep", "eta2", out.eta2);
    out.s = nonempty_list<double>(j, "sweep", "s", out.s);
    for (double e : out.epsilon) positive(e, "sweep.epsilon");
    for (double e : out.eta1)
        if (!(e >= 0.0)) throw ConfigError("sweep.eta1", "sweep.eta1 values must be nonnegative");
    for (double e : out.eta2)
        if (!(e >= 0.0)) throw ConfigError("sweep.eta2", "sweep.eta2 values must be nonnegative");
    for (double s : out.s)
        if (!(s >= 0.0)) throw ConfigError("sweep.s", "sweep.s values must be nonnegative");
    for (std::size_t k : out.k)
        if (k == 0) throw ConfigError("sweep.k", "sweep.k values must be at least 1");
    return out;
}

std::optional<Labels> labels_of(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return get<std::vector<std::string>>(j, path, key, {});
}

IngestOptions parse_ingest(const json& j, const fs::path& dir) {
    allow_keys(j, "ingest", {"input", "delimiter", "header", "x_alphabet", "y_alphabet", "smoothing"});
    IngestOptions out;
    if (j.contains("input")) out.input = resolve(dir, get<std::string>(j, "ingest", "input", ""));
    const std::string delim = get<std::string>(j, "ingest", "delimiter", ",");
    if (delim.size() != 1) throw ConfigError("ingest.delimiter", "ingest.delimiter must be a single character");
    out.delimiter = delim[0];
    out.header = get<bool>(j, "ingest", "header", true);
    out.x_alphabet = labels_of(j, "ingest", "x_alphabet");
    out.y_alphabet = labels_of(j, "ingest", "y_alphabet");
    out.smoothing = get<double>(j, "ingest", "smoothing", 0.0);
    if (!(out.smoothing >= 0.0)) throw ConfigError("ingest.smoothing", "ingest.smoothing must be nonnegative");
    return out;
}

std::vector<SymmetryEnsemble> parse_symmetry(const json& j, std::size_t& samples) {
    allow_keys(j, "symmetry", {"samples", "ensembles"});
    samples = get<std::size_t>(j, "symmetry", "samples", samples);
    if (samples < 2) throw ConfigError("symmetry.samples", "symmetry.samples must be at least 2");
    std::vector<SymmetryEnsemble> out;
    if (!j.contains("ensembles")) return out;
    const json& list = j.at("ensembles");
    if (!list.is_array()) throw ConfigError("symmetry.ensembles", "symmetry.ensembles must be a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "symmetry.ensembles[" + std::to_string(i) + "]";
        const json& e = list.at(i);
        allow_keys(e, path, {"name", "kind", "sigma2", "rows", "cols", "side", "epsilon", "s"});
        SymmetryEnsemble s;
        s.kind = get<std::string>(e, path, "kind", "");
        s.name = get<std::string>(e, path, "name", s.kind + std::to_string(i));
        s.sigma2 = get<double>(e, path, "sigma2", 1.5);
        s.rows = get<std::size_t>(e, path, "rows", 2);
        s.cols = get<std::size_t>(e, path, "cols", 2);
        s.side = get<std::string>(e, path, "side", "u");
        s.epsilon = get<double>(e, path, "epsilon", 0.05);
        s.s = get<double>(e, path, "s", 0.0);
        if (s.kind != "anisotropic" && s.kind != "gaussian" && s.kind != "information")
            throw ConfigError(path + ".kind", path + ".kind must be anisotropic, gaussian or information");
        if (s.name.empty() || s.name.find_first_of(", \t\n") != std::string::npos)
            throw ConfigError(path + ".name", path + ".name must be a non-empty word");
        if (!names.insert(s.name).second) throw ConfigError(path + ".name", "duplicate ensemble name " + s.name);
        positive(s.sigma2, path + ".sigma2");
        positive(s.epsilon, path + ".epsilon");
        if (s.rows == 0 || s.cols == 0) throw ConfigError(path, path + " dimensions must be positive");
        if (s.side != "u" && s.side != "v") throw ConfigError(path + ".side", path + ".side must be u or v");
        if (!(s.s >= 0.0)) throw ConfigError(path + ".s", path + ".s must be nonnegative");
        out.push_back(std::move(s));
    }
    return out;
}

suites::SuiteSizes parse_verify(const json& j) {
    allow_keys(j, "verify", {"joints", "example_samples", "bilinear_triples", "propagation_pairs", "ensemble_samples"});
    suites::SuiteSizes out;
    out.joints = get<std::size_t>(j, "verify", "joints", out.joints);
    out.example_samples = get<std::size_t>(j, "verify", "example_samples", out.example_samples);
    out.bilinear_triples = get<std::size_t>(j, "verify", "bilinear_triples", out.bilinear_triples);
    out.propagation_pairs = get<std::size_t>(j, "verify", "propagation_pairs", out.propagation_pairs);
    out.ensemble_samples = get<std::size_t>(j, "verify", "ensemble_samples", out.ensemble_samples);
    if (out.example_samples < 2 || out.ensemble_samples < 2)
        throw ConfigError("verify", "verify sample counts must be at least 2");
    return out;
}

// Every dimension and sweep value is checked against the loaded chain before
// any computation starts.
void cross_validate(const ExperimentConfig& c) {
    const JointPmf joint = load_joint(c);
    if (!joint.x_marginal().strictly_positive() || !joint.y_marginal().strictly_positive())
        throw ConfigError("chain.joint", "the joint must have strictly positive marginals");
    for (double eta : c.sweep.eta1) make_channel(c.channel_x, joint.x_labels(), eta);
    for (double eta : c.sweep.eta2) make_channel(c.channel_y, joint.y_labels(), eta);
    const std::size_t kmax = std::min(joint.x_size(), joint.y_size()) - 1;
    for (std::size_t k : c.sweep.k)
        if (k > kmax)
            throw ConfigError("sweep.k", "sweep.k value " + std::to_string(k) + " exceeds min(|X|, |Y|) - 1 = " +
                                             std::to_string(kmax));
    if (c.features_k == 0 || c.features_k > kmax)
        throw ConfigError("features.k", "features.k must lie in [1, min(|X|, |Y|) - 1]");
    for (double eps : c.sweep.epsilon)
        for (double s : c.sweep.s) {
            ensemble_spec(c.ensemble_u, joint.x_marginal(), eps, s, 0).validate();
            ensemble_spec(c.ensemble_v, joint.y_marginal(), eps, s, 0).validate();
        }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c;
    c.text = ss.str();
    c.source = path;
    json root;
    try {
        root = json::parse(c.text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(root, "config",
               {"seed", "output_root", "chain", "ensembles", "sweep", "budgets", "features", "ingest", "symmetry",
                "verify"});
    const fs::path dir = path.parent_path();
    c.seed = get<std::uint64_t>(root, "config", "seed", 0);
    if (root.contains("output_root")) c.output_root = get<std::string>(root, "config", "output_root", "");

    const json empty = json::object();
    const json& chain = root.contains("chain") ? root.at("chain") : empty;
    allow_keys(chain, "chain", {"joint", "channel_x", "channel_y"});
    c.joint = parse_joint(chain.contains("joint") ? chain.at("joint") : empty, dir);
    c.channel_x = parse_channel(chain.contains("channel_x") ? chain.at("channel_x") : empty, "chain.channel_x", dir);
    c.channel_y = parse_channel(chain.contains("channel_y") ? chain.at("channel_y") : empty, "chain.channel_y", dir);

    const json& ens = root.contains("ensembles") ? root.at("ensembles") : empty;
    allow_keys(ens, "ensembles", {"u", "v"});
    c.ensemble_u = parse_ensemble(ens.contains("u") ? ens.at("u") : empty, "ensembles.u");
    c.ensemble_v = parse_ensemble(ens.contains("v") ? ens.at("v") : empty, "ensembles.v");

    c.sweep = parse_sweep(root.contains("sweep") ? root.at("sweep") : empty);

    const json& budgets = root.contains("budgets") ? root.at("budgets") : empty;
    allow_keys(budgets, "budgets", {"configs", "delta_samples", "slack"});
    c.configs = get<std::size_t>(budgets, "budgets", "configs", c.configs);
    c.delta_samples = get<std::size_t>(budgets, "budgets", "delta_samples", c.delta_samples);
    c.slack = get<double>(budgets, "budgets", "slack", c.slack);
    if (c.configs < 2) throw ConfigError("budgets.configs", "budgets.configs must be at least 2");
    if (c.delta_samples < 2) throw ConfigError("budgets.delta_samples", "budgets.delta_samples must be at least 2");
    if (!(c.slack >= 0.0)) throw ConfigError("budgets.slack", "budgets.slack must be nonnegative");

    const json& features = root.contains("features") ? root.at("features") : empty;
    allow_keys(features, "features", {"k"});
    c.features_k = get<std::size_t>(features, "features", "k", c.features_k);

    c.ingest = parse_ingest(root.contains("ingest") ? root.at("ingest") : empty, dir);
    c.symmetry = parse_symmetry(root.contains("symmetry") ? root.at("symmetry") : empty, c.symmetry_samples);
    c.verify = parse_verify(root.contains("verify") ? root.at("verify") : empty);

    try {
        cross_validate(c);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("chain", e.what());
    }
    return c;
}

JointPmf load_joint(const ExperimentConfig& config) {
    if (config.joint.file) return joint_from_document(read_document_file(*config.joint.file));
    Rng rng = make_rng(config.joint.seed, kGeneratorStream, 0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(config.joint.y_size), static_cast<Eigen::Index>(config.joint.x_size));
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, j) = u(rng);
    return JointPmf(p / p.sum());
}

Channel make_channel(const ChannelSource& source, const Labels& labels, double eta) {
    if (source.kind == "identity") {
        if (eta != 0.0) throw ConfigError("sweep", "identity channels only allow eta = 0");
        return Channel::identity(labels);
    }
    if (source.kind == "symmetric") return Channel::make(Channel::symmetric_perturbation(labels.size()), eta, labels);
    const Channel file = channel_from_document(read_document_file(*source.file));
    if (file.labels() != labels)
        throw ConfigError(source.file->string(), "channel file alphabet does not match the joint");
    return Channel::make(file.perturbation(), eta, labels);
}

AttributeEnsembleSpec ensemble_spec(const EnsembleSource& source, const Pmf& base, double epsilon, double s,
                                    std::uint64_t seed) {
    AttributeEnsembleSpec spec{base, source.prior ? Pmf(Eigen::Map<const Eigen::VectorXd>(
                                                            source.prior->data(),
                                                            static_cast<Eigen::Index>(source.prior->size())))
                                                  : Pmf::uniform(source.w_size)};
    spec.epsilon = epsilon;
    spec.anisotropy = s;
    spec.rho = source.rho;
    spec.seed = seed;
    spec.rejection_cap = source.rejection_cap;
    return spec;
}

}  // namespace ufs::cli
