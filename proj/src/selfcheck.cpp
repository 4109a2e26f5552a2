#include "selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "discrepancy.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace homm {

namespace {

double rel_diff(double a, double b) {
    const double denom = std::max(std::abs(a), std::abs(b));
    if (denom == 0.0) {
        return 0.0;
    }
    return std::abs(a - b) / denom;
}

Matrix random_batch(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                    double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(lo, hi);
        }
    }
    return m;
}

// Independent kernel MMD on raw feature rows: plain loops, no shared code
// with the khomm path it is checked against. Accumulates in long double so
// the oracle's own rounding stays below the 1e-12 comparison level.
double direct_kernel_mmd(const Matrix& source, const Matrix& target, const KernelConfig& kernel) {
    const Eigen::Index b = source.rows();
    auto k = [&kernel](const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
        double dist = (x - y).squaredNorm();
        if (kernel.exponent == 1) {
            dist = std::sqrt(dist);
        }
        return std::exp(-kernel.gamma * dist);
    };
    long double ss = 0.0L, st = 0.0L, tt = 0.0L;
    for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index j = 0; j < b; ++j) {
            ss += k(source.row(i), source.row(j));
            st += k(source.row(i), target.row(j));
            tt += k(target.row(i), target.row(j));
        }
    }
    const long double bb = static_cast<long double>(b) * static_cast<long double>(b);
    return static_cast<double>((ss - 2.0L * st + tt) / bb);
}

std::string format_measured(double value) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << value;
    return out.str();
}

} // namespace

std::vector<PropertyResult> run_equivalence_suite(std::uint64_t seed, int pairs) {
    Rng rng(mix_seed(seed, 0xE001));
    double worst_mmd = 0.0, worst_gram = 0.0, worst_sampled = 0.0, worst_kernel = 0.0;
    for (int n = 0; n < pairs; ++n) {
        const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.bounded(63)); // [2, 64]
        const Eigen::Index width = 2 + static_cast<Eigen::Index>(rng.bounded(15)); // [2, 16]
        const Matrix source = random_batch(rng, b, width);
        const Matrix target = random_batch(rng, b, width);

        worst_mmd = std::max(worst_mmd,
                             rel_diff(homm_full(source, target, 1), linear_mmd(source, target)));
        worst_gram = std::max(worst_gram, rel_diff(homm_full(source, target, 2),
                                                   gram_loss(source, target, false)));
        const IndexMatrix exhaustive3 = exhaustive_indices(width, 3);
        worst_sampled = std::max(worst_sampled, rel_diff(homm_sampled(source, target, exhaustive3),
                                                         homm_full(source, target, 3)));
        const IndexMatrix exhaustive1 = exhaustive_indices(width, 1);
        const KernelConfig kernel{0.5, 2};
        worst_kernel =
            std::max(worst_kernel, rel_diff(khomm(source, target, exhaustive1, kernel),
                                            direct_kernel_mmd(source, target, kernel)));
    }
    const double threshold = 1e-12;
    auto make = [&](const char* name, double worst) {
        return PropertyResult{name, worst <= threshold, worst, threshold,
                              "max relative error over " + std::to_string(pairs) + " pairs"};
    };
    return {make("equivalence_order1_linear_mmd", worst_mmd),
            make("equivalence_order2_gram", worst_gram),
            make("equivalence_sampled_exhaustive", worst_sampled),
            make("equivalence_kernelized_kmmd", worst_kernel)};
}

PropertyResult run_monte_carlo_consistency(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xE002));
    const Eigen::Index b = 32;
    const Eigen::Index width = 16;
    const int order = 3;
    const Matrix source = random_batch(rng, b, width);
    const Matrix target = random_batch(rng, b, width);
    const double exact = homm_full(source, target, order);

    const std::vector<Eigen::Index> sample_counts{100, 1000, 10000};
    const int repeats = 20;
    std::vector<double> mean_abs_errors;
    double final_gap_in_se = 0.0;
    std::ostringstream detail;
    for (std::size_t level = 0; level < sample_counts.size(); ++level) {
        const Eigen::Index count = sample_counts[level];
        std::vector<double> estimates;
        estimates.reserve(repeats);
        for (int r = 0; r < repeats; ++r) {
            const IndexMatrix idx =
                sample_indices(width, order, count,
                               mix_seed(mix_seed(seed, 0xE003 + level), static_cast<std::uint64_t>(r)));
            estimates.push_back(homm_sampled(source, target, idx));
        }
        double mean = 0.0, abs_err = 0.0;
        for (const double e : estimates) {
            mean += e;
            abs_err += std::abs(e - exact);
        }
        mean /= repeats;
        abs_err /= repeats;
        mean_abs_errors.push_back(abs_err);
        double var = 0.0;
        for (const double e : estimates) {
            var += (e - mean) * (e - mean);
        }
        var /= (repeats - 1);
        const double standard_error = std::sqrt(var / repeats);
        detail << "N=" << count << " mean_abs_err=" << format_measured(abs_err);
        if (level + 1 < sample_counts.size()) {
            detail << "; ";
        }
        if (level + 1 == sample_counts.size()) {
            final_gap_in_se = standard_error > 0.0 ? std::abs(mean - exact) / standard_error
                                                   : (mean == exact ? 0.0 : 1e99);
        }
    }
    const bool monotone = mean_abs_errors[0] > mean_abs_errors[1] &&
                          mean_abs_errors[1] > mean_abs_errors[2];
    PropertyResult result;
    result.name = "monte_carlo_consistency";
    result.threshold = 3.0;
    result.measured = final_gap_in_se;
    result.passed = monotone && final_gap_in_se <= 3.0;
    result.detail = detail.str() + "; gap at N=10000 is " + format_measured(final_gap_in_se) +
                    " standard errors" + (monotone ? "" : "; error not monotone in N");
    return result;
}

namespace {

struct GradScenario {
    std::string name;
    CompositeLossConfig config;
};

} // namespace

std::vector<PropertyResult> run_gradient_suite(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xE004));
    const Eigen::Index batch = 4;
    const std::vector<Eigen::Index> layer_sizes{4, 6, 8, 3}; // input 4, adapted 8, 3 classes
    MlpNetwork net = make_mlp(layer_sizes, mix_seed(seed, 0xE005));
    const Matrix source_inputs = random_batch(rng, batch, 4, -2.0, 2.0);
    const Matrix target_inputs = random_batch(rng, batch, 4, -2.0, 2.0);
    std::vector<int> labels(static_cast<std::size_t>(batch));
    for (auto& label : labels) {
        label = static_cast<int>(rng.bounded(3));
    }

    // Fixed inputs for the clustering term: a low threshold so most rows
    // are assigned, and non-trivial centers.
    const ForwardTrace initial_target = forward(net, target_inputs);
    PseudoLabelAssignment assignment;
    for (Eigen::Index i = 0; i < batch; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < initial_target.probs.cols(); ++j) {
            if (initial_target.probs(i, j) > initial_target.probs(i, best)) {
                best = j;
            }
        }
        assignment.sample_indices.push_back(i);
        assignment.labels.push_back(static_cast<int>(best));
        assignment.confidences.push_back(initial_target.probs(i, best));
    }
    ClassCenters centers{random_batch(rng, 3, 8, -0.5, 0.5), 0.5};
    const IndexMatrix sampled_idx = sample_indices(8, 3, 100, mix_seed(seed, 0xE006));
    const IndexMatrix kernel_idx = sample_indices(8, 2, 50, mix_seed(seed, 0xE007));

    std::vector<GradScenario> scenarios;
    {
        CompositeLossConfig c;
        c.source_ce = true;
        scenarios.push_back({"gradient_source_ce", c});
    }
    auto discrepancy_scenario = [&](const char* name, DiscrepancyKind kind, int order,
                                    double lambda) {
        CompositeLossConfig c;
        c.source_ce = false;
        c.lambda_d = lambda;
        c.variant = kind;
        c.order = order;
        c.group_count = 2;
        c.index_matrix = kind == DiscrepancyKind::sampled ? &sampled_idx
                         : kind == DiscrepancyKind::kernelized ? &kernel_idx
                                                               : nullptr;
        c.kernel = KernelConfig{0.3, 2};
        scenarios.push_back({name, c});
    };
    discrepancy_scenario("gradient_homm_full_p3", DiscrepancyKind::full, 3, 10.0);
    discrepancy_scenario("gradient_homm_group_p3", DiscrepancyKind::group, 3, 10.0);
    discrepancy_scenario("gradient_homm_sampled_p3", DiscrepancyKind::sampled, 3, 10.0);
    discrepancy_scenario("gradient_khomm_p2", DiscrepancyKind::kernelized, 2, 10.0);
    discrepancy_scenario("gradient_linear_mmd", DiscrepancyKind::mmd, 1, 10.0);
    discrepancy_scenario("gradient_gram", DiscrepancyKind::gram, 2, 10.0);
    discrepancy_scenario("gradient_coral", DiscrepancyKind::coral, 2, 10.0);
    {
        CompositeLossConfig c;
        c.source_ce = false;
        c.lambda_dc = 1.0;
        c.assignment = &assignment;
        c.centers = &centers;
        scenarios.push_back({"gradient_clustering", c});
    }
    {
        CompositeLossConfig c;
        c.source_ce = false;
        c.entropy_weight = 1.0;
        scenarios.push_back({"gradient_entropy", c});
    }
    {
        CompositeLossConfig c;
        c.source_ce = true;
        c.lambda_d = 5.0;
        c.variant = DiscrepancyKind::full;
        c.order = 3;
        c.lambda_dc = 0.7;
        c.assignment = &assignment;
        c.centers = &centers;
        c.entropy_weight = 0.3;
        scenarios.push_back({"gradient_composite", c});
    }

    const double step = 1e-5;
    const double tolerance = 1e-4;
    std::vector<PropertyResult> results;
    for (const GradScenario& scenario : scenarios) {
        const CompositeResult analytic =
            backward(net, source_inputs, labels, target_inputs, scenario.config);
        auto loss = [&](const MlpNetwork& candidate) {
            return backward(candidate, source_inputs, labels, target_inputs, scenario.config)
                .composite;
        };
        const GradCheckReport report =
            finite_diff_check(net, loss, analytic.grads, step, tolerance);
        PropertyResult result;
        result.name = scenario.name;
        result.measured = report.max_rel_error;
        result.threshold = tolerance;
        result.passed = report.passed();
        result.detail = "max relative error over " + std::to_string(report.checked) +
                        " parameters (" + std::to_string(report.failures.size()) + " above tolerance)";
        results.push_back(std::move(result));
    }
    return results;
}

std::vector<PropertyResult> run_self_check(std::uint64_t seed) {
    std::vector<PropertyResult> results = run_equivalence_suite(seed);
    results.push_back(run_monte_carlo_consistency(seed));
    std::vector<PropertyResult> gradient = run_gradient_suite(seed);
    results.insert(results.end(), gradient.begin(), gradient.end());
    return results;
}

bool all_passed(const std::vector<PropertyResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const PropertyResult& r) { return r.passed; });
}

} // namespace homm
