#ifndef HOMM_DATA_HPP
#define HOMM_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "moments.hpp"

namespace homm {

enum class DomainTag { source, target };

struct LabeledDataset {
    Matrix features; // n x d
    std::vector<int> labels;
    DomainTag domain = DomainTag::source;

    bool has_labels() const { return !labels.empty(); }
    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

// Label-stripped features. The training loop accepts the target domain
// only in this form, so target labels can never leak into training.
struct FeatureSet {
    Matrix features;
};

FeatureSet strip_labels(const LabeledDataset& dataset);

// Deterministic description of a synthetic source/target pair: the target
// distribution is the source distribution pushed through rotation (in the
// plane of the first two coordinates), scaling, and translation.
struct ShiftSpec {
    int dim = 2;
    int class_count = 3;
    int samples_per_class = 100;
    double rotation = 0.0; // radians
    std::vector<double> translation; // length dim; empty means zeros
    double scale = 1.0;
    double noise_std = 0.3;
    std::uint64_t seed = 0;
};

// Gaussian mixture with one anisotropic component per class, means on a
// circle in the first two coordinates. Target samples are independent
// draws from the shifted distribution, so target class-conditional means
// are exactly the shifted source means.
std::pair<LabeledDataset, LabeledDataset> gen_gaussian_mixture_pair(const ShiftSpec& spec);

// Two interleaving half-circles (class_count must be 2, dim must be 2).
// Arc positions are evenly spaced; only the additive noise is random.
std::pair<LabeledDataset, LabeledDataset> gen_two_moons_pair(const ShiftSpec& spec);

// CSV interchange: UTF-8, comma-separated, header of feature names with an
// optional trailing "label" column, one sample per row. Values written by
// save_features_csv round-trip exactly.
LabeledDataset load_features_csv(const std::string& path);
void save_features_csv(const LabeledDataset& dataset, const std::string& path);

} // namespace homm

#endif
