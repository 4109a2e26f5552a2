#include "trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace homm {

namespace {

// Substream tags for the run seed.
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagSourceOrder = 0x22;
constexpr std::uint64_t kTagTargetOrder = 0x33;
constexpr std::uint64_t kTagIndexDraw = 0x44;

} // namespace

PseudoLabelAssignment pseudo_label(const Matrix& probs, double eta) {
    PseudoLabelAssignment assignment;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < probs.cols(); ++j) {
            if (probs(i, j) > probs(i, best)) {
                best = j;
            }
        }
        if (probs(i, best) > eta) {
            assignment.sample_indices.push_back(i);
            assignment.labels.push_back(static_cast<int>(best));
            assignment.confidences.push_back(probs(i, best));
        }
    }
    return assignment;
}

namespace {

void check_finite_term(double value, const char* term, long step) {
    if (!std::isfinite(value)) {
        throw NumericError("step " + std::to_string(step) + ": non-finite " + term + " loss");
    }
}

} // namespace

StepMetrics train_step(TrainState& state, const Matrix& source_batch,
                       const std::vector<int>& source_labels, const Matrix& target_batch,
                       const ExperimentConfig& config, long step_index) {
    if (step_index < 0 || step_index >= config.total_steps) {
        throw ContractError("step_index " + std::to_string(step_index) +
                            " outside [0, total_steps)");
    }
    const DiscrepancyKind kind = discrepancy_kind_from_string(config.loss_variant);

    const ForwardTrace source_trace = forward(state.net, source_batch);
    const ForwardTrace target_trace = forward(state.net, target_batch);

    IndexMatrix idx;
    const bool needs_indices =
        kind == DiscrepancyKind::sampled || kind == DiscrepancyKind::kernelized;
    if (needs_indices) {
        idx = sample_indices(state.net.adapted_width(), config.p, config.N,
                             mix_seed(mix_seed(config.seed, kTagIndexDraw),
                                      static_cast<std::uint64_t>(step_index)));
    }

    const bool clustering_active = step_index >= config.warmup_steps;
    PseudoLabelAssignment assignment;
    if (clustering_active) {
        assignment = pseudo_label(target_trace.probs, config.eta);
    }

    CompositeLossConfig loss_config;
    loss_config.source_ce = true;
    loss_config.lambda_d = config.lambda_d;
    loss_config.variant = kind;
    loss_config.order = config.p;
    loss_config.group_count = config.n_g;
    loss_config.widen_last_group = config.widen_last_group;
    loss_config.index_matrix = needs_indices ? &idx : nullptr;
    loss_config.kernel = KernelConfig{config.gamma, config.kernel_exponent};
    loss_config.lambda_dc = clustering_active ? config.lambda_dc : 0.0;
    loss_config.assignment = &assignment;
    loss_config.centers = &state.centers;
    loss_config.entropy_weight = config.entropy_weight;
    loss_config.moment_cap = config.moment_cap;

    CompositeResult result =
        backward(state.net, source_trace, source_labels, target_trace, loss_config);

    StepMetrics metrics;
    metrics.step = step_index;
    metrics.loss_source = result.source_ce;
    metrics.composite = result.composite;
    metrics.pseudo_count = assignment.size();

    // Inactive terms still get their values recorded; backward skips them
    // so a zero weight cannot perturb the parameter trajectory.
    if (config.lambda_d != 0.0) {
        metrics.loss_discrepancy = result.discrepancy;
    } else {
        const Matrix& adapted_s = source_trace.adapted();
        const Matrix& adapted_t = target_trace.adapted();
        switch (kind) {
        case DiscrepancyKind::full:
            metrics.loss_discrepancy =
                homm_full(adapted_s, adapted_t, config.p, config.moment_cap);
            break;
        case DiscrepancyKind::group:
            metrics.loss_discrepancy =
                homm_group(adapted_s, adapted_t, config.p, config.n_g,
                           config.widen_last_group, config.moment_cap);
            break;
        case DiscrepancyKind::sampled:
            metrics.loss_discrepancy = homm_sampled(adapted_s, adapted_t, idx);
            break;
        case DiscrepancyKind::kernelized:
            metrics.loss_discrepancy = khomm(adapted_s, adapted_t, idx, loss_config.kernel);
            break;
        case DiscrepancyKind::mmd:
            metrics.loss_discrepancy = linear_mmd(adapted_s, adapted_t);
            break;
        case DiscrepancyKind::gram:
            metrics.loss_discrepancy = gram_loss(adapted_s, adapted_t, false);
            break;
        case DiscrepancyKind::coral:
            metrics.loss_discrepancy = gram_loss(adapted_s, adapted_t, true);
            break;
        }
    }
    if (clustering_active) {
        metrics.loss_clustering =
            config.lambda_dc != 0.0
                ? result.clustering
                : clustering_loss(target_trace.adapted(), assignment, state.centers);
    }
    metrics.loss_entropy = config.entropy_weight != 0.0 ? result.entropy
                                                        : entropy_loss(target_trace.probs);

    check_finite_term(metrics.loss_source, "source cross-entropy", step_index);
    check_finite_term(metrics.loss_discrepancy, config.loss_variant.c_str(), step_index);
    check_finite_term(metrics.loss_clustering, "clustering", step_index);
    check_finite_term(metrics.loss_entropy, "entropy", step_index);
    check_finite_term(metrics.composite, "composite", step_index);

    optimizer_step(state.net, state.optimizer, result.grads);

    if (clustering_active) {
        state.centers = update_centers(state.centers, target_trace.adapted(), assignment,
                                       config.strict_center_update);
    }
    return metrics;
}

EvalResult evaluate(const MlpNetwork& net, const LabeledDataset& dataset) {
    if (!dataset.has_labels()) {
        throw ContractError("evaluate requires a labeled dataset");
    }
    const Eigen::Index classes = net.class_count();
    const ForwardTrace trace = forward(net, dataset.features);
    EvalResult result;
    result.per_class.assign(static_cast<std::size_t>(classes),
                            std::numeric_limits<double>::quiet_NaN());
    result.class_counts.assign(static_cast<std::size_t>(classes), 0);
    std::vector<long> correct(static_cast<std::size_t>(classes), 0);
    long total_correct = 0;
    for (Eigen::Index i = 0; i < trace.probs.rows(); ++i) {
        const int label = dataset.labels[static_cast<std::size_t>(i)];
        if (label < 0 || static_cast<Eigen::Index>(label) >= classes) {
            throw ContractError("label " + std::to_string(label) + " out of range for " +
                                std::to_string(classes) + " classes");
        }
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < trace.probs.cols(); ++j) {
            if (trace.probs(i, j) > trace.probs(i, best)) {
                best = j;
            }
        }
        result.class_counts[static_cast<std::size_t>(label)] += 1;
        if (best == static_cast<Eigen::Index>(label)) {
            correct[static_cast<std::size_t>(label)] += 1;
            total_correct += 1;
        }
    }
    result.accuracy = static_cast<double>(total_correct) /
                      static_cast<double>(trace.probs.rows());
    for (Eigen::Index j = 0; j < classes; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        if (result.class_counts[jj] > 0) {
            result.per_class[jj] = static_cast<double>(correct[jj]) /
                                   static_cast<double>(result.class_counts[jj]);
        }
    }
    return result;
}

namespace {

// Cyclic mini-batch scheduler: a shuffled pass over all rows, reshuffled
// from (seed, epoch) whenever fewer than a full batch remains.
class BatchCycler {
public:
    BatchCycler(Eigen::Index count, std::uint64_t seed) : seed_(seed) {
        order_.resize(static_cast<std::size_t>(count));
        std::iota(order_.begin(), order_.end(), 0);
        reshuffle();
    }

    const std::vector<Eigen::Index>& next(Eigen::Index batch, std::vector<Eigen::Index>& out) {
        if (cursor_ + static_cast<std::size_t>(batch) > order_.size()) {
            reshuffle();
        }
        out.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                   order_.begin() + static_cast<std::ptrdiff_t>(cursor_) + batch);
        cursor_ += static_cast<std::size_t>(batch);
        return out;
    }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), 0);
        Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch_)));
        rng.shuffle(order_);
        cursor_ = 0;
        ++epoch_;
    }

    std::vector<Eigen::Index> order_;
    std::size_t cursor_ = 0;
    std::uint64_t seed_;
    long epoch_ = 0;
};

Matrix gather_rows(const Matrix& source, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = source.row(rows[i]);
    }
    return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledDataset& source,
                                const FeatureSet& target_train,
                                const LabeledDataset* target_eval) {
    validate_config(config);
    if (!source.has_labels()) {
        throw ContractError("source dataset must be labeled");
    }
    if (source.dim() != target_train.features.cols()) {
        throw ContractError("source and target feature widths differ");
    }
    for (const int label : source.labels) {
        if (label < 0 || label >= config.class_count) {
            throw ContractError("source label " + std::to_string(label) +
                                " out of range for class_count " +
                                std::to_string(config.class_count));
        }
    }
    if (config.total_steps > 0) {
        if (config.batch_size > source.size() || config.batch_size > target_train.features.rows()) {
            throw ContractError("batch_size exceeds dataset size");
        }
    }

    std::vector<Eigen::Index> layer_sizes;
    layer_sizes.push_back(source.dim());
    for (const auto h : config.hidden) {
        layer_sizes.push_back(h);
    }
    layer_sizes.push_back(config.adapted_width);
    layer_sizes.push_back(config.class_count);

    ExperimentResult result;
    result.state.net = make_mlp(layer_sizes, mix_seed(config.seed, kTagInit));
    result.state.optimizer = make_optimizer(result.state.net, config.learning_rate);
    result.state.centers =
        ClassCenters{Matrix::Zero(config.class_count, config.adapted_width), config.alpha};

    BatchCycler source_cycler(source.size(), mix_seed(config.seed, kTagSourceOrder));
    BatchCycler target_cycler(target_train.features.rows(), mix_seed(config.seed, kTagTargetOrder));
    std::vector<Eigen::Index> source_rows, target_rows;
    std::vector<int> batch_labels(static_cast<std::size_t>(config.batch_size));

    for (long step = 0; step < config.total_steps; ++step) {
        source_cycler.next(config.batch_size, source_rows);
        target_cycler.next(config.batch_size, target_rows);
        const Matrix source_batch = gather_rows(source.features, source_rows);
        const Matrix target_batch = gather_rows(target_train.features, target_rows);
        for (std::size_t i = 0; i < source_rows.size(); ++i) {
            batch_labels[i] = source.labels[static_cast<std::size_t>(source_rows[i])];
        }

        StepMetrics metrics =
            train_step(result.state, source_batch, batch_labels, target_batch, config, step);

        const bool eval_now = (step + 1) % config.eval_every == 0;
        if (eval_now) {
            metrics.has_eval = true;
            metrics.source_accuracy = evaluate(result.state.net, source).accuracy;
            if (target_eval != nullptr && target_eval->has_labels()) {
                metrics.target_accuracy = evaluate(result.state.net, *target_eval).accuracy;
                metrics.has_target_accuracy = true;
            }
        }
        if (step % config.log_every == 0 || eval_now || step == config.total_steps - 1) {
            result.metrics.records.push_back(metrics);
        }
    }

    result.metrics.final_source_accuracy = evaluate(result.state.net, source).accuracy;
    if (target_eval != nullptr && target_eval->has_labels()) {
        result.metrics.final_target_accuracy = evaluate(result.state.net, *target_eval).accuracy;
        result.metrics.has_final_target_accuracy = true;
    }
    return result;
}

} // namespace homm
