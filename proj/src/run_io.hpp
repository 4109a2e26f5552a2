#ifndef HOMM_RUN_IO_HPP
#define HOMM_RUN_IO_HPP

#include <string>

#include "trainer.hpp"

namespace homm {

struct RunSummary {
    double final_source_accuracy = 0.0;
    double final_target_accuracy = 0.0;
    bool has_final_target_accuracy = false;
};

// Builds (or loads) the configured dataset pair. Generated targets keep
// their labels for evaluation; CSV targets may be unlabeled.
std::pair<LabeledDataset, LabeledDataset> build_datasets(const ExperimentConfig& config);

// Runs one experiment and writes three artifacts into output_dir:
//   manifest.json  - config snapshot, library version, seed, dataset
//                    description, timestamps; written before training
//   metrics.jsonl  - one JSON object per logged step (timestamp-free, so
//                    identical config and seed reproduce it byte for byte)
//   checkpoint.txt - final network parameters
// The target's labels are stripped before training and used only for the
// evaluation columns.
RunSummary run_experiment_to_dir(const ExperimentConfig& config, const LabeledDataset& source,
                                 const LabeledDataset& target, const std::string& output_dir);

} // namespace homm

#endif
