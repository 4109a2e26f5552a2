#ifndef HOMM_SELFCHECK_HPP
#define HOMM_SELFCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace homm {

struct PropertyResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;  // the quantity compared against threshold
    double threshold = 0.0;
    std::string detail;
};

// Analytic identities, each measured as the worst relative error over
// `pairs` random batch pairs (b in [2,64], L in [2,16], entries uniform in
// (-1,1)); all must hold to 1e-12:
//   order-1 matching         == linear MMD
//   order-2 matching         == uncentralized Gram matching
//   sampled with exhaustive indices == exact matching (p <= 3)
//   kernelized at p=1 with exhaustive indices == kernel MMD on raw features
std::vector<PropertyResult> run_equivalence_suite(std::uint64_t seed, int pairs = 100);

// Sampled-estimator consistency on fixed random batches (b=32, L=16, p=3):
// mean absolute error over 20 seeds decreases with N in {1e2, 1e3, 1e4},
// and at N=1e4 the seed-mean lies within 3 empirical standard errors of
// the exact value.
PropertyResult run_monte_carlo_consistency(std::uint64_t seed);

// Central-difference verification (step 1e-5, tolerance 1e-4 per
// parameter) of every composite-objective term in isolation and of the
// composite, on a tiny network (input 4, adapted width 8, 3 classes,
// batches of 4).
std::vector<PropertyResult> run_gradient_suite(std::uint64_t seed);

// All of the above.
std::vector<PropertyResult> run_self_check(std::uint64_t seed = 0x5eed);

bool all_passed(const std::vector<PropertyResult>& results);

} // namespace homm

#endif
