#pragma once

// Property suites shared by the `verify` subcommand and the acceptance binary.
// Each suite is deterministic for a fixed seed.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ufs::suites {

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string detail;
};

struct SuiteSizes {
    std::size_t joints = 50;             ///< random joints for the canonical-matrix suites
    std::size_t example_samples = 100000;
    std::size_t bilinear_triples = 100;
    std::size_t propagation_pairs = 50;
    std::size_t ensemble_samples = 20000;  ///< draws per delta estimate in the symmetry suites
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

SuiteResult canonical_identities(const SuiteSizes& sizes);
SuiteResult feature_normalization(const SuiteSizes& sizes);
SuiteResult anisotropic_example(const SuiteSizes& sizes);
SuiteResult bilinear_bound_suite(const SuiteSizes& sizes);
SuiteResult propagation_suite(const SuiteSizes& sizes);
SuiteResult channel_spectrum(const SuiteSizes& sizes);

/// All of the above, in order.
std::vector<SuiteResult> run_all(const SuiteSizes& sizes);

}  // namespace ufs::suites
