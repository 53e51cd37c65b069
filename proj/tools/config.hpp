#pragma once

// Experiment configuration for the command-line harness. The dialect is JSON;
// docs/config.md lists every key. Relative paths resolve against the
// directory of the config file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "suites.hpp"
#include "ufs/error.hpp"
#include "ufs/ensemble.hpp"
#include "ufs/exponent.hpp"
#include "ufs/model.hpp"

namespace ufs::cli {

/// Raised for any config that fails validation; `path` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& what) : Error("validation", what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct JointSource {
    std::optional<std::filesystem::path> file;
    std::size_t x_size = 4;  ///< generator, when no file is given
    std::size_t y_size = 4;
    std::uint64_t seed = 0;
};

struct ChannelSource {
    std::string kind = "symmetric";  ///< identity | symmetric | file
    std::optional<std::filesystem::path> file;
};

struct EnsembleSource {
    std::size_t w_size = 3;
    std::optional<std::vector<double>> prior;
    double rho = 1.0;
    std::size_t rejection_cap = 1000;
};

struct SweepGrid {
    std::vector<double> epsilon{0.05};
    std::vector<std::size_t> k{1};
    std::vector<double> eta1{0.0};
    std::vector<double> eta2{0.0};
    std::vector<double> s{0.0};
};

struct IngestOptions {
    std::optional<std::filesystem::path> input;
    char delimiter = ',';
    bool header = true;
    std::optional<Labels> x_alphabet;
    std::optional<Labels> y_alphabet;
    double smoothing = 0.0;
};

struct SymmetryEnsemble {
    std::string name;
    std::string kind;  ///< anisotropic | gaussian | information
    double sigma2 = 1.5;
    std::size_t rows = 2;
    std::size_t cols = 2;
    std::string side = "u";  ///< information ensembles: u (base P_X) or v (base P_Y)
    double epsilon = 0.05;
    double s = 0.0;
};

struct ExperimentConfig {
    std::string text;  ///< the file, verbatim
    std::filesystem::path source;
    std::uint64_t seed = 0;
    std::optional<std::string> output_root;

    JointSource joint;
    ChannelSource channel_x;
    ChannelSource channel_y;
    EnsembleSource ensemble_u;
    EnsembleSource ensemble_v;
    SweepGrid sweep;
    std::size_t configs = 200;
    std::size_t delta_samples = 20000;
    double slack = 1.0;
    std::size_t features_k = 1;
    IngestOptions ingest;
    std::vector<SymmetryEnsemble> symmetry;
    std::size_t symmetry_samples = 100000;
    suites::SuiteSizes verify;
};

/// Parses and validates the file. Loads the joint and channel files to check
/// that every dimension and sweep value is consistent.
ExperimentConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

JointPmf load_joint(const ExperimentConfig& config);
/// Channel over `labels` for the given eta.
Channel make_channel(const ChannelSource& source, const Labels& labels, double eta);
AttributeEnsembleSpec ensemble_spec(const EnsembleSource& source, const Pmf& base, double epsilon, double s,
                                    std::uint64_t seed);

}  // namespace ufs::cli
