// ufs: command-line harness for feature extraction, symmetry reports and
// exponent sweeps. Exit codes: 0 success, 1 runtime failure or failed
// verification, 2 usage error, 3 invalid configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "suites.hpp"
#include "ufs/dependence.hpp"
#include "ufs/io.hpp"
#include "ufs/random.hpp"
#include "ufs/symmetry.hpp"

namespace fs = std::filesystem;
using namespace ufs;
using namespace ufs::cli;

namespace {

constexpr const char* kOutRootEnv = "UFS_OUT_ROOT";
constexpr std::uint64_t kStreamU = 1;
constexpr std::uint64_t kStreamV = 2;
constexpr std::uint64_t kSymmetryStream = 0x5E;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned jobs = 1;
    std::optional<std::size_t> samples;
};

struct Run {
    ExperimentConfig config;
    std::uint64_t seed = 0;
    std::string hash;
    fs::path out;
    unsigned jobs = 1;

    std::string header() const { return "config " + hash + " seed " + std::to_string(seed); }
};

Run prepare(const Common& common, const std::string& subcommand) {
    Run r;
    r.config = load_config(common.config_path);
    r.seed = common.seed.value_or(r.config.seed);
    r.hash = fnv1a_hex(r.config.text);
    r.jobs = std::max(1u, common.jobs);
    if (!common.out.empty()) {
        r.out = common.out;
    } else if (const char* root = std::getenv(kOutRootEnv); root && *root) {
        r.out = fs::path(root) / subcommand;
    } else if (r.config.output_root) {
        r.out = fs::path(*r.config.output_root) / subcommand;
    } else {
        r.out = fs::path("ufs-out") / subcommand;
    }
    fs::create_directories(r.out);
    std::ofstream echo(r.out / "config.json", std::ios::binary);
    echo << r.config.text;
    if (!echo) throw Error("io", "cannot write " + (r.out / "config.json").string());
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw Error("io", "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_doc(const Run& run, const fs::path& path, TextDocument doc) {
    doc.comments.insert(doc.comments.begin(), run.header());
    std::ostringstream ss;
    write_document(ss, doc);
    write_text(path, ss.str());
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + fields[i];
    return line;
}

// ---- ingest ----------------------------------------------------------------

struct IngestFlags {
    std::string input;
    std::string delimiter;
    bool no_header = false;
};

int cmd_ingest(const Common& common, const IngestFlags& flags) {
    Run run = prepare(common, "ingest");
    IngestOptions opt = run.config.ingest;
    if (!flags.input.empty()) opt.input = flags.input;
    if (!flags.delimiter.empty()) {
        if (flags.delimiter.size() != 1) throw ConfigError("--delimiter", "--delimiter must be one character");
        opt.delimiter = flags.delimiter[0];
    }
    if (flags.no_header) opt.header = false;
    if (!opt.input) throw ConfigError("--input", "no sample file: pass --input or set ingest.input");
    const auto samples = read_samples_csv_file(*opt.input, {opt.delimiter, opt.header});
    JointPmf joint = joint_from_samples(samples, opt.x_alphabet, opt.y_alphabet);
    if (opt.smoothing > 0.0) joint = joint.smoothed(opt.smoothing);
    TextDocument doc = joint_document(joint);
    doc.comments.push_back("samples " + std::to_string(samples.size()) + " smoothing " +
                           format_double(opt.smoothing));
    write_doc(run, run.out / "joint.txt", doc);
    std::cout << "wrote " << (run.out / "joint.txt").string() << " (" << samples.size() << " samples, "
              << joint.x_size() << "x" << joint.y_size() << ")\n";
    return 0;
}

// ---- features --------------------------------------------------------------

struct FeatureFlags {
    std::optional<std::size_t> k;
    std::string joint;
};

int cmd_features(const Common& common, const FeatureFlags& flags) {
    Run run = prepare(common, "features");
    const JointPmf joint =
        flags.joint.empty() ? load_joint(run.config) : joint_from_document(read_document_file(flags.joint));
    const CdmMatrix cdm(joint);
    const std::size_t k = flags.k.value_or(run.config.features_k);
    if (k == 0 || k >= cdm.rank_bound())
        throw ConfigError("--k", "k must lie in [1, " + std::to_string(cdm.rank_bound() - 1) + "]");
    const FeatureSelection sel = select_features(cdm, k);

    TextDocument f = features_document(sel.f, sel.sigma);
    TextDocument g = features_document(sel.g, sel.sigma);
    f.comments.push_back("features f over X");
    g.comments.push_back("features g over Y");
    if (!sel.degenerate.empty()) {
        std::string groups;
        for (const auto& grp : sel.degenerate) {
            groups += " {";
            for (std::size_t i = 0; i < grp.size(); ++i) groups += (i ? " " : "") + std::to_string(grp[i] + 1);
            groups += "}";
        }
        f.comments.push_back("degenerate singular value groups (1-based):" + groups);
        g.comments.push_back(f.comments.back());
    }
    for (std::size_t z : sel.zero_sigma) {
        f.comments.push_back("feature " + std::to_string(z + 1) + " has zero singular value");
        g.comments.push_back(f.comments.back());
    }
    write_doc(run, run.out / "features_f.txt", f);
    write_doc(run, run.out / "features_g.txt", g);

    TextDocument profile;
    profile.kind = "sigma_profile";
    profile.matrices = {{"sigma", cdm.singular_values()}};
    write_doc(run, run.out / "sigma.txt", profile);

    std::vector<std::string> head{"index", "sigma"};
    for (const auto& l : joint.x_labels()) head.push_back(csv_field("f_" + l));
    for (const auto& l : joint.y_labels()) head.push_back(csv_field("g_" + l));
    std::string csv = "# " + run.header() + "\n" + join(head) + "\n";
    for (std::size_t i = 0; i < k; ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        std::vector<std::string> row{std::to_string(i + 1), format_double(sel.sigma(c))};
        for (Eigen::Index x = 0; x < sel.f.values().rows(); ++x) row.push_back(format_double(sel.f.values()(x, c)));
        for (Eigen::Index y = 0; y < sel.g.values().rows(); ++y) row.push_back(format_double(sel.g.values()(y, c)));
        csv += join(row) + "\n";
    }
    write_text(run.out / "features.csv", csv);
    std::cout << "sigma:";
    for (Eigen::Index i = 0; i < cdm.singular_values().size(); ++i)
        std::cout << ' ' << format_double(cdm.singular_values()(i));
    std::cout << "\nwrote " << run.out.string() << "/{features_f.txt,features_g.txt,sigma.txt,features.csv}\n";
    return 0;
}

// ---- symmetry --------------------------------------------------------------

MatrixEnsemble build_ensemble(const SymmetryEnsemble& e, const ExperimentConfig& config, std::uint64_t seed) {
    if (e.kind == "anisotropic") return MatrixEnsemble::example_anisotropic(e.sigma2, seed);
    if (e.kind == "gaussian")
        return MatrixEnsemble::gaussian(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols), seed);
    const JointPmf joint = load_joint(config);
    const bool u = e.side == "u";
    return information_ensemble(ensemble_spec(u ? config.ensemble_u : config.ensemble_v,
                                              u ? joint.x_marginal() : joint.y_marginal(), e.epsilon, e.s, seed));
}

int cmd_symmetry(const Common& common) {
    Run run = prepare(common, "symmetry");
    const std::size_t samples = common.samples.value_or(run.config.symmetry_samples);
    if (samples < 2) throw ConfigError("--samples", "--samples must be at least 2");
    if (run.config.symmetry.empty()) throw ConfigError("symmetry.ensembles", "no ensembles listed in the config");
    TextDocument doc;
    doc.kind = "symmetry_report";
    doc.scalars.emplace_back("samples", static_cast<double>(samples));
    std::string csv = "# " + run.header() + "\n" +
                      "name,rows,cols,samples,delta_hat,delta_margin,alpha,mean_norm,mean_bar,moment_spread,"
                      "spread_bar,cross_covariance,cross_bar\n";
    for (std::size_t i = 0; i < run.config.symmetry.size(); ++i) {
        const SymmetryEnsemble& e = run.config.symmetry[i];
        const MatrixEnsemble ens = build_ensemble(e, run.config, derive_seed(run.seed, kSymmetryStream, i));
        const DeltaEstimate d = delta_estimate(ens, samples, run.jobs);
        const Lemma1Report l1 = lemma1_report(ens, samples, run.jobs);
        const std::vector<std::pair<std::string, double>> values{
            {"delta_hat", d.delta},
            {"delta_margin", d.margin},
            {"alpha", d.alpha},
            {"mean_norm", l1.mean_norm.value},
            {"mean_bar", l1.mean_norm.bar},
            {"moment_spread", l1.max_moment_spread.value},
            {"spread_bar", l1.max_moment_spread.bar},
            {"cross_covariance", l1.max_cross_covariance.value},
            {"cross_bar", l1.max_cross_covariance.bar}};
        std::vector<std::string> row{e.name, std::to_string(ens.rows()), std::to_string(ens.cols()),
                                     std::to_string(samples)};
        for (const auto& [name, v] : values) {
            doc.scalars.emplace_back(e.name + "." + name, v);
            row.push_back(format_double(v));
        }
        if (d.range.unconverged) doc.comments.push_back(e.name + ": rank-one search hit the iteration cap");
        csv += join(row) + "\n";
        std::cout << e.name << ": delta_hat " << format_double(d.delta) << " +- " << format_double(d.margin) << "\n";
    }
    write_doc(run, run.out / "symmetry.txt", doc);
    write_text(run.out / "symmetry.csv", csv);
    return 0;
}

// ---- simulate --------------------------------------------------------------

struct SweepPoint {
    double epsilon;
    std::size_t k;
    double eta1;
    double eta2;
    double s;
};

std::vector<SweepPoint> enumerate(const SweepGrid& g) {
    std::vector<SweepPoint> out;
    for (double eps : g.epsilon)
        for (std::size_t k : g.k)
            for (double e1 : g.eta1)
                for (double e2 : g.eta2)
                    for (double s : g.s) out.push_back({eps, k, e1, e2, s});
    return out;
}

const char* kSimulateHeader =
    "sweep_id,epsilon,k,eta1,eta2,s,delta_hat,e_us,e_vs,e_ut,e_vt,bound_us,bound_vs,bound_ut,bound_vt,"
    "residual_budget,stderr_us,stderr_vs,stderr_ut,stderr_vt,c_u,c_v,n_configs";

std::string simulate_row(std::size_t id, const SweepPoint& p, const Run& run, const JointPmf& clean,
                         std::map<std::pair<double, double>, double>& delta_cache, std::size_t delta_samples) {
    const ExperimentConfig& c = run.config;
    const std::uint64_t seed_u = derive_seed(run.seed, kStreamU, 0);
    const std::uint64_t seed_v = derive_seed(run.seed, kStreamV, 0);
    const AttributeEnsembleSpec mu_u = ensemble_spec(c.ensemble_u, clean.x_marginal(), p.epsilon, p.s, seed_u);
    const AttributeEnsembleSpec mu_v = ensemble_spec(c.ensemble_v, clean.y_marginal(), p.epsilon, p.s, seed_v);
    const auto key = std::make_pair(p.epsilon, p.s);
    if (!delta_cache.count(key)) {
        const double du = delta_estimate(information_ensemble(mu_u), delta_samples, run.jobs).delta;
        const double dv = delta_estimate(information_ensemble(mu_v), delta_samples, run.jobs).delta;
        delta_cache[key] = std::max(du, dv);
    }
    const double delta = delta_cache[key];
    const ChainModel chain{clean, make_channel(c.channel_x, clean.x_labels(), p.eta1),
                           make_channel(c.channel_y, clean.y_labels(), p.eta2)};
    const FeatureSelection sel = select_features(chain.noisy(), p.k);
    const ExponentReport rep = average_exponents(mu_u, mu_v, chain, sel.f, sel.g, {c.configs, false, run.jobs});
    const TheoremBound b = theorem_bound(p.epsilon, p.k, sel.sigma, rep.constants.c_u.mean, rep.constants.c_v.mean,
                                         delta, p.eta1, p.eta2, c.slack);
    std::vector<std::string> row{std::to_string(id),      format_double(p.epsilon), std::to_string(p.k),
                                 format_double(p.eta1),   format_double(p.eta2),    format_double(p.s),
                                 format_double(delta)};
    for (const MeanStderr& e : rep.exponents()) row.push_back(format_double(e.mean));
    for (double v : b.bound) row.push_back(format_double(v));
    row.push_back(format_double(b.residual));
    for (const MeanStderr& e : rep.exponents()) row.push_back(format_double(e.se));
    row.push_back(format_double(rep.constants.c_u.mean));
    row.push_back(format_double(rep.constants.c_v.mean));
    row.push_back(std::to_string(rep.n_configs));
    return join(row);
}

// Manifest: a header line naming the config hash and seed, then one
// "<sweep_id>\t<csv row>" line per finished point. An unterminated last line
// is a point interrupted mid-write and is recomputed.
std::map<std::size_t, std::string> read_manifest(const fs::path& path, const std::string& header) {
    std::map<std::size_t, std::string> done;
    std::ifstream in(path, std::ios::binary);
    if (!in) return done;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) break;
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (first) {
            if (line != "# " + header)
                throw Error("manifest", "manifest " + path.string() + " belongs to another config or seed");
            first = false;
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw Error("manifest", "malformed manifest line in " + path.string());
        done[std::stoull(line.substr(0, tab))] = line.substr(tab + 1);
    }
    return done;
}

int cmd_simulate(const Common& common, std::optional<std::size_t> stop_after) {
    Run run = prepare(common, "simulate");
    const std::size_t delta_samples = common.samples.value_or(run.config.delta_samples);
    if (delta_samples < 2) throw ConfigError("--samples", "--samples must be at least 2");
    // The sample override changes results, so it is part of the manifest identity.
    const std::string header = run.header() + " delta_samples " + std::to_string(delta_samples);
    const JointPmf clean = load_joint(run.config);
    const std::vector<SweepPoint> points = enumerate(run.config.sweep);

    const fs::path manifest_path = run.out / "manifest.txt";
    std::map<std::size_t, std::string> done = read_manifest(manifest_path, header);
    {
        // Rewrite the manifest without any torn trailing line before appending.
        std::string text = "# " + header + "\n";
        for (const auto& [id, row] : done) text += std::to_string(id) + "\t" + row + "\n";
        write_text(manifest_path, text);
    }
    std::ofstream manifest(manifest_path, std::ios::binary | std::ios::app);
    std::map<std::pair<double, double>, double> delta_cache;
    std::size_t computed = 0;
    for (std::size_t id = 0; id < points.size(); ++id) {
        if (done.count(id)) continue;
        if (stop_after && computed >= *stop_after) break;
        const std::string row = simulate_row(id, points[id], run, clean, delta_cache, delta_samples);
        manifest << id << '\t' << row << '\n' << std::flush;
        done[id] = row;
        ++computed;
        std::cout << "point " << id + 1 << "/" << points.size() << " done\n" << std::flush;
    }
    if (done.size() < points.size()) {
        std::cout << "stopped with " << done.size() << "/" << points.size() << " points; rerun to resume\n";
        return 0;
    }
    std::string csv = "# " + run.header() + "\n" + kSimulateHeader + "\n";
    for (const auto& [id, row] : done) csv += row + "\n";
    write_text(run.out / "simulate.csv", csv);
    std::cout << "wrote " << (run.out / "simulate.csv").string() << " (" << points.size() << " points)\n";
    return 0;
}

// ---- verify ----------------------------------------------------------------

int cmd_verify(const Common& common) {
    Run run = prepare(common, "verify");
    suites::SuiteSizes sizes = run.config.verify;
    sizes.seed = run.seed;
    sizes.jobs = run.jobs;
    if (common.samples) sizes.ensemble_samples = *common.samples;
    std::string csv = "# " + run.header() + "\nsuite,result,cases,failures,detail\n";
    bool all = true;
    for (const auto& r : suites::run_all(sizes)) {
        all = all && r.pass;
        csv += join({csv_field(r.name), r.pass ? "pass" : "fail", std::to_string(r.cases), std::to_string(r.failures),
                     csv_field(r.detail)}) +
               "\n";
        std::printf("%-30s %s  %zu/%zu  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.cases - r.failures,
                    r.cases, r.detail.c_str());
    }
    write_text(run.out / "verify.csv", csv);
    return all ? 0 : 1;
}

void error_record(const std::string& kind, const std::string& message, const std::string& path = "") {
    nlohmann::json rec{{"error", {{"kind", kind}, {"message", message}}}};
    if (!path.empty()) rec["error"]["path"] = path;
    std::cerr << rec.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SVD features, symmetry reports and exponent sweeps for discrete joints"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", common.seed, "override the config seed");
    app.add_option("--out", common.out, std::string("output directory (default $") + kOutRootEnv + "/<subcommand>)");
    app.add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--samples", common.samples, "override the sample budget of symmetry, simulate or verify");
    app.fallthrough();

    IngestFlags ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "samples CSV -> joint file");
    ingest_cmd->add_option("--input", ingest.input, "sample file (x,y records)");
    ingest_cmd->add_option("--delimiter", ingest.delimiter, "field delimiter");
    ingest_cmd->add_flag("--no-header", ingest.no_header, "the first record is data");

    FeatureFlags features;
    auto* features_cmd = app.add_subcommand("features", "joint -> SVD feature sets and singular value profile");
    features_cmd->add_option("--k", features.k, "number of features");
    features_cmd->add_option("--joint", features.joint, "joint file overriding the config chain");

    auto* symmetry_cmd = app.add_subcommand("symmetry", "ensembles -> delta estimates and moment reports");

    std::optional<std::size_t> stop_after;
    auto* simulate_cmd = app.add_subcommand("simulate", "exponent sweep -> long-format CSV");
    simulate_cmd->add_option("--stop-after", stop_after, "compute at most this many new sweep points, then exit");

    auto* verify_cmd = app.add_subcommand("verify", "run the property suites and print a pass/fail table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(common, ingest);
        if (*features_cmd) return cmd_features(common, features);
        if (*symmetry_cmd) return cmd_symmetry(common);
        if (*simulate_cmd) return cmd_simulate(common, stop_after);
        if (*verify_cmd) return cmd_verify(common);
    } catch (const ConfigError& e) {
        error_record(e.kind(), e.what(), e.path());
        return 3;
    } catch (const Error& e) {
        error_record(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        error_record("internal", e.what());
        return 1;
    }
    return 2;
}
