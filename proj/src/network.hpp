#ifndef HOMM_NETWORK_HPP
#define HOMM_NETWORK_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "discrepancy.hpp"
#include "moments.hpp"

namespace homm {

// Feed-forward classifier: tanh on every hidden layer including the
// adapted layer (the one feeding the output layer), softmax on top. The
// adapted layer must keep signs, so a non-negative activation is never an
// option here.
struct MlpNetwork {
    std::vector<Eigen::Index> layer_sizes; // [input, hidden..., adapted, classes]
    std::vector<Matrix> weights;           // weights[l]: sizes[l] x sizes[l+1]
    std::vector<Vector> biases;            // biases[l]: sizes[l+1]

    Eigen::Index input_dim() const { return layer_sizes.front(); }
    Eigen::Index adapted_width() const { return layer_sizes[layer_sizes.size() - 2]; }
    Eigen::Index class_count() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

// Seeded fan-in-scaled symmetric uniform init; biases start at zero.
MlpNetwork make_mlp(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed);

struct ForwardTrace {
    // activations[0] is the input; activations[l+1] the tanh output of
    // layer l. The last entry is the adapted layer.
    std::vector<Matrix> activations;
    Matrix logits;
    Matrix probs;

    const Matrix& adapted() const { return activations.back(); }
};

ForwardTrace forward(const MlpNetwork& net, const Matrix& inputs);

// Mean negative log-likelihood of the labeled rows; probabilities are
// floored at 1e-12 before the log.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

struct GradientSet {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

GradientSet zero_gradients(const MlpNetwork& net);

enum class DiscrepancyKind { full, group, sampled, kernelized, mmd, gram, coral };

const char* to_string(DiscrepancyKind kind);
DiscrepancyKind discrepancy_kind_from_string(const std::string& name);

// Which terms of the composite objective are active and how they are
// weighted. Pointer members are borrowed for the duration of the call;
// sampled/kernelized variants require index_matrix, the clustering term
// requires assignment and centers. Centers are constants here: no gradient
// flows through the moving-average update.
struct CompositeLossConfig {
    bool source_ce = true;
    double lambda_d = 0.0;
    DiscrepancyKind variant = DiscrepancyKind::full;
    int order = 3;
    int group_count = 1;
    bool widen_last_group = false;
    const IndexMatrix* index_matrix = nullptr;
    KernelConfig kernel;
    double lambda_dc = 0.0;
    const PseudoLabelAssignment* assignment = nullptr;
    const ClassCenters* centers = nullptr;
    double entropy_weight = 0.0;
    std::size_t moment_cap = kDefaultMomentCap;
};

struct CompositeResult {
    double source_ce = 0.0;
    double discrepancy = 0.0;
    double clustering = 0.0;
    double entropy = 0.0;
    double composite = 0.0;
    GradientSet grads;
};

// Reverse-mode gradients of the weighted composite with respect to every
// parameter. Both streams run the same parameters; gradients from the
// source cross-entropy, the discrepancy (through the adapted activations of
// both streams), the clustering term, and the entropy term all accumulate
// into one gradient set. Terms with zero weight are skipped entirely.
CompositeResult backward(const MlpNetwork& net, const ForwardTrace& source_trace,
                         const std::vector<int>& source_labels, const ForwardTrace& target_trace,
                         const CompositeLossConfig& config);

// Convenience overload running both forward passes internally.
CompositeResult backward(const MlpNetwork& net, const Matrix& source_inputs,
                         const std::vector<int>& source_labels, const Matrix& target_inputs,
                         const CompositeLossConfig& config);

// Adam with bias correction. Deterministic given state and gradients.
struct OptimizerState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<Matrix> first_moment_w, second_moment_w;
    std::vector<Vector> first_moment_b, second_moment_b;
};

OptimizerState make_optimizer(const MlpNetwork& net, double learning_rate);

// One update in place; rejects non-finite gradients.
void optimizer_step(MlpNetwork& net, OptimizerState& state, const GradientSet& grads);

// ---- gradient verification ----------------------------------------------

struct GradCheckEntry {
    std::size_t layer = 0;
    bool is_bias = false;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    Eigen::Index checked = 0;
    std::vector<GradCheckEntry> failures;

    bool passed() const { return failures.empty(); }
};

// Central differences of loss around every parameter, compared against the
// supplied analytic gradient. The relative error for a parameter counts as
// zero when the two derivatives agree within 1e-9 absolutely (finite
// differencing cannot resolve below that); otherwise it is
// |analytic - numeric| / max(|analytic|, |numeric|).
GradCheckReport finite_diff_check(const MlpNetwork& net,
                                  const std::function<double(const MlpNetwork&)>& loss,
                                  const GradientSet& analytic, double step, double tolerance);

// ---- checkpoint serialization -------------------------------------------
//
// Versioned textual dump: layer sizes followed by parameters in layer
// order, values in hexadecimal floating point so round-trips are bit-exact.

std::string serialize_network(const MlpNetwork& net);
MlpNetwork deserialize_network(const std::string& text);
void save_network(const MlpNetwork& net, const std::string& path);
MlpNetwork load_network(const std::string& path);

} // namespace homm

#endif
