#pragma once

// Line-oriented structured text for joints, channels and feature sets.
//
//   # free comment
//   @kind joint
//   @labels x a b c
//   @scalar eta 0.050000000000000003
//   @matrix probs 2 3
//   0.10000000000000001 0.20000000000000001 0.10000000000000001
//   ...
//
// Floats are written with 17 significant digits so a write/read round trip
// is exact. Blank lines are skipped on read and '#' lines are collected as
// comments wherever they appear.

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ufs/geometry.hpp"
#include "ufs/model.hpp"

namespace ufs {

std::string format_double(double v);

struct TextDocument {
    std::string kind;
    std::vector<std::string> comments;
    std::vector<std::pair<std::string, Labels>> labels;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> matrices;

    const Labels& label_set(const std::string& name) const;
    double scalar(const std::string& name) const;
    std::optional<double> find_scalar(const std::string& name) const;
    const Eigen::MatrixXd& matrix(const std::string& name) const;
    const Eigen::MatrixXd* find_matrix(const std::string& name) const;
};

void write_document(std::ostream& out, const TextDocument& doc);
TextDocument read_document(std::istream& in);
TextDocument read_document_file(const std::filesystem::path& path);
void write_document_file(const std::filesystem::path& path, const TextDocument& doc);

TextDocument joint_document(const JointPmf& joint);
JointPmf joint_from_document(const TextDocument& doc);

TextDocument channel_document(const Channel& chan);
Channel channel_from_document(const TextDocument& doc);

/// Feature set with its base pmf; `sigma` is written when given.
TextDocument features_document(const FeatureSet& fs, const std::optional<Eigen::VectorXd>& sigma = std::nullopt);
FeatureSet features_from_document(const TextDocument& doc);

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
};

/// Reads (x, y) records from the first two columns. Errors carry the line.
std::vector<SamplePair> read_samples_csv(std::istream& in, const CsvOptions& options = {});
std::vector<SamplePair> read_samples_csv_file(const std::filesystem::path& path, const CsvOptions& options = {});

}  // namespace ufs
