#include "ufs/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ufs/error.hpp"

namespace ufs {

namespace {

template <class T>
const T* find_named(const std::vector<std::pair<std::string, T>>& items, const std::string& name) {
    for (const auto& [key, value] : items)
        if (key == name) return &value;
    return nullptr;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": not a number: '" + tok + "'");
    }
}

std::size_t parse_size(const std::string& tok, std::size_t line) {
    const double v = parse_double(tok, line);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ParseError("line " + std::to_string(line) + ": not a dimension: '" + tok + "'");
    return static_cast<std::size_t>(v);
}

void require_kind(const TextDocument& doc, const std::string& kind) {
    if (doc.kind != kind) throw ParseError("expected a '" + kind + "' document, found '" + doc.kind + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
    return buf;
}

const Labels& TextDocument::label_set(const std::string& name) const {
    if (const Labels* l = find_named(labels, name)) return *l;
    throw ParseError("missing @labels " + name);
}

double TextDocument::scalar(const std::string& name) const {
    if (auto v = find_scalar(name)) return *v;
    throw ParseError("missing @scalar " + name);
}

std::optional<double> TextDocument::find_scalar(const std::string& name) const {
    if (const double* v = find_named(scalars, name)) return *v;
    return std::nullopt;
}

const Eigen::MatrixXd& TextDocument::matrix(const std::string& name) const {
    if (const Eigen::MatrixXd* m = find_matrix(name)) return *m;
    throw ParseError("missing @matrix " + name);
}

const Eigen::MatrixXd* TextDocument::find_matrix(const std::string& name) const { return find_named(matrices, name); }

void write_document(std::ostream& out, const TextDocument& doc) {
    for (const auto& c : doc.comments) out << "# " << c << '\n';
    out << "@kind " << doc.kind << '\n';
    for (const auto& [name, labels] : doc.labels) {
        out << "@labels " << name;
        for (const auto& l : labels) out << ' ' << l;
        out << '\n';
    }
    for (const auto& [name, v] : doc.scalars) out << "@scalar " << name << ' ' << format_double(v) << '\n';
    for (const auto& [name, m] : doc.matrices) {
        out << "@matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
            out << '\n';
        }
    }
}

TextDocument read_document(std::istream& in) {
    TextDocument doc;
    std::string line;
    std::size_t lineno = 0;
    auto next_data_line = [&](std::string& out) {
        while (std::getline(in, out)) {
            ++lineno;
            const auto first = out.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            if (out[first] == '#') {
                std::string text = out.substr(first + 1);
                if (!text.empty() && text.front() == ' ') text.erase(0, 1);
                while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
                doc.comments.push_back(std::move(text));
                continue;
            }
            return true;
        }
        return false;
    };
    while (next_data_line(line)) {
        const auto tok = split_ws(line);
        const std::string& head = tok[0];
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (head == "@kind") {
            if (tok.size() != 2) throw ParseError(where + "@kind takes one word");
            doc.kind = tok[1];
        } else if (head == "@labels") {
            if (tok.size() < 3) throw ParseError(where + "@labels needs a name and at least one label");
            doc.labels.emplace_back(tok[1], Labels(tok.begin() + 2, tok.end()));
        } else if (head == "@scalar") {
            if (tok.size() != 3) throw ParseError(where + "@scalar takes a name and a value");
            doc.scalars.emplace_back(tok[1], parse_double(tok[2], lineno));
        } else if (head == "@matrix") {
            if (tok.size() != 4) throw ParseError(where + "@matrix takes a name, rows and columns");
            const std::size_t rows = parse_size(tok[2], lineno);
            const std::size_t cols = parse_size(tok[3], lineno);
            Eigen::MatrixXd m(rows, cols);
            for (std::size_t i = 0; i < rows; ++i) {
                if (!next_data_line(line))
                    throw ParseError("unexpected end of input in @matrix " + tok[1]);
                const auto row = split_ws(line);
                if (row.size() != cols)
                    throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                                     " values in @matrix " + tok[1]);
                for (std::size_t j = 0; j < cols; ++j)
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(row[j], lineno);
            }
            doc.matrices.emplace_back(tok[1], std::move(m));
        } else {
            throw ParseError(where + "unknown directive '" + head + "'");
        }
    }
    if (doc.kind.empty()) throw ParseError("document has no @kind line");
    return doc;
}

TextDocument read_document_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    try {
        return read_document(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_document_file(const std::filesystem::path& path, const TextDocument& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path.string());
    write_document(out, doc);
}

TextDocument joint_document(const JointPmf& joint) {
    TextDocument doc;
    doc.kind = "joint";
    doc.labels = {{"x", joint.x_labels()}, {"y", joint.y_labels()}};
    doc.matrices = {{"probs", joint.probs()}};
    return doc;
}

JointPmf joint_from_document(const TextDocument& doc) {
    require_kind(doc, "joint");
    return JointPmf(doc.label_set("x"), doc.label_set("y"), doc.matrix("probs"));
}

TextDocument channel_document(const Channel& chan) {
    TextDocument doc;
    doc.kind = "channel";
    doc.labels = {{"symbols", chan.labels()}};
    doc.scalars = {{"eta", chan.eta()}};
    doc.matrices = {{"perturbation", chan.perturbation()}, {"transition", chan.matrix()}};
    return doc;
}

Channel channel_from_document(const TextDocument& doc) {
    require_kind(doc, "channel");
    const Labels& labels = doc.label_set("symbols");
    if (const Eigen::MatrixXd* t = doc.find_matrix("perturbation"))
        return Channel::make(*t, doc.scalar("eta"), labels);
    return Channel::from_matrix(doc.matrix("transition"), labels);
}

TextDocument features_document(const FeatureSet& fs, const std::optional<Eigen::VectorXd>& sigma) {
    TextDocument doc;
    doc.kind = "features";
    doc.labels = {{"symbols", fs.base().labels()}};
    doc.scalars = {{"k", static_cast<double>(fs.k())}};
    doc.matrices = {{"base", fs.base().probs()}, {"values", fs.values()}};
    if (sigma) doc.matrices.emplace_back("sigma", *sigma);
    return doc;
}

FeatureSet features_from_document(const TextDocument& doc) {
    require_kind(doc, "features");
    const Eigen::MatrixXd& base = doc.matrix("base");
    if (base.cols() != 1) throw ParseError("@matrix base must be a single column");
    const Eigen::MatrixXd& values = doc.matrix("values");
    if (const auto k = doc.find_scalar("k"); k && *k != static_cast<double>(values.cols()))
        throw ParseError("@scalar k does not match the number of feature columns");
    return FeatureSet(values, Pmf(doc.label_set("symbols"), base.col(0)));
}

std::vector<SamplePair> read_samples_csv(std::istream& in, const CsvOptions& options) {
    std::vector<SamplePair> out;
    std::string line;
    std::size_t lineno = 0;
    bool skipped_header = !options.header;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, options.delimiter)) fields.push_back(trim(field));
        if (fields.size() < 2 || fields[0].empty() || fields[1].empty())
            throw ParseError("line " + std::to_string(lineno) + ": expected at least two non-empty fields");
        out.emplace_back(fields[0], fields[1]);
    }
    return out;
}

std::vector<SamplePair> read_samples_csv_file(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    try {
        return read_samples_csv(in, options);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace ufs
