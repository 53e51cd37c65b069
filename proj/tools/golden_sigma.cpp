// Golden singular-value profiles.
//
//   golden_sigma generate <joint.txt> <out.txt>
//   golden_sigma compare <golden.txt> <candidate.txt> <tolerance>
//
// `generate` builds the canonical dependence matrix entry by entry and takes
// its singular values with Eigen's divide-and-conquer SVD, which shares no
// code with the library's Jacobi solver. `compare` exits nonzero when the
// profiles differ in length or in any entry by more than the tolerance.

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "ufs/io.hpp"

namespace {

Eigen::VectorXd oracle_sigma(const Eigen::MatrixXd& p) {
    const Eigen::VectorXd py = p.rowwise().sum();
    const Eigen::VectorXd px = p.colwise().sum().transpose();
    Eigen::MatrixXd b(p.rows(), p.cols());
    for (Eigen::Index j = 0; j < p.rows(); ++j)
        for (Eigen::Index i = 0; i < p.cols(); ++i)
            b(j, i) = (p(j, i) - px(i) * py(j)) / std::sqrt(px(i) * py(j));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b);
    Eigen::VectorXd s = svd.singularValues();
    // The centered matrix always has a null direction; report it as exactly zero.
    const double floor = 1e-12;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) < floor) s(i) = 0.0;
    return s;
}

int usage() {
    std::cerr << "usage: golden_sigma generate <joint> <out> | compare <golden> <candidate> <tolerance>\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    const std::string mode = argv[1];
    try {
        if (mode == "generate" && argc == 4) {
            const ufs::TextDocument joint = ufs::read_document_file(argv[2]);
            ufs::TextDocument out;
            out.kind = "sigma_profile";
            out.comments = {"singular values of the canonical dependence matrix (BDCSVD)"};
            out.matrices = {{"sigma", oracle_sigma(joint.matrix("probs"))}};
            ufs::write_document_file(argv[3], out);
            return 0;
        }
        if (mode == "compare" && argc == 5) {
            const Eigen::MatrixXd golden = ufs::read_document_file(argv[2]).matrix("sigma");
            const Eigen::MatrixXd cand = ufs::read_document_file(argv[3]).matrix("sigma");
            const double tol = std::strtod(argv[4], nullptr);
            if (golden.size() != cand.size()) {
                std::cerr << "length mismatch: " << golden.size() << " vs " << cand.size() << "\n";
                return 1;
            }
            const double diff = (golden - cand).cwiseAbs().maxCoeff();
            std::cout << "max |golden - candidate| = " << diff << " (tolerance " << tol << ")\n";
            return diff <= tol ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return usage();
}
