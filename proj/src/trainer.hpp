#ifndef HOMM_TRAINER_HPP
#define HOMM_TRAINER_HPP

#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "discrepancy.hpp"
#include "network.hpp"

namespace homm {

// Confident predictions: rows whose maximum probability strictly exceeds
// eta, labeled by argmax (ties broken toward the lowest class index).
PseudoLabelAssignment pseudo_label(const Matrix& probs, double eta);

struct StepMetrics {
    long step = 0;
    double loss_source = 0.0;
    double loss_discrepancy = 0.0;
    double loss_clustering = 0.0;
    double loss_entropy = 0.0;
    double composite = 0.0;
    Eigen::Index pseudo_count = 0;
    bool has_eval = false;
    double source_accuracy = 0.0;
    double target_accuracy = 0.0;
    bool has_target_accuracy = false;
};

struct TrainMetrics {
    std::vector<StepMetrics> records;
    double final_source_accuracy = 0.0;
    double final_target_accuracy = 0.0;
    bool has_final_target_accuracy = false;
};

struct TrainState {
    MlpNetwork net;
    OptimizerState optimizer;
    ClassCenters centers;
};

// One optimization step of the composite objective. The clustering path
// (pseudo-labeling, the clustering loss, and the center update after the
// gradient step) only runs once step_index reaches warmup_steps. Sampled
// and kernelized variants draw a fresh index matrix from (seed,
// step_index). Deterministic given its inputs.
StepMetrics train_step(TrainState& state, const Matrix& source_batch,
                       const std::vector<int>& source_labels, const Matrix& target_batch,
                       const ExperimentConfig& config, long step_index);

struct EvalResult {
    double accuracy = 0.0;
    // One entry per class; NaN marks classes absent from the dataset.
    std::vector<double> per_class;
    std::vector<long> class_counts;
};

EvalResult evaluate(const MlpNetwork& net, const LabeledDataset& dataset);

struct ExperimentResult {
    TrainMetrics metrics;
    TrainState state;
};

// Runs total_steps steps with cyclic mini-batches, reshuffled every epoch
// from the run seed. The target domain enters training label-free; the
// optional labeled target dataset is used for evaluation only. The whole
// run is a pure function of (config, datasets).
ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledDataset& source,
                                const FeatureSet& target_train,
                                const LabeledDataset* target_eval);

} // namespace homm

#endif
