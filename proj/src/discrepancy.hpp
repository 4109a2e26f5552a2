#ifndef HOMM_DISCREPANCY_HPP
#define HOMM_DISCREPANCY_HPP

#include <vector>

#include "moments.hpp"

namespace homm {

// RBF kernel k(x, y) = exp(-gamma * ||x - y||^exponent). Exponent 2 is the
// Gaussian kernel (positive definite, default); exponent 1 keeps the
// unsquared-distance form selectable.
struct KernelConfig {
    double gamma = 1e-4;
    int exponent = 2;
};

// Per-class target-domain feature centroids with their moving-average rate.
struct ClassCenters {
    Matrix centers; // c x L
    double alpha = 0.5;
};

// Confident target samples selected for the clustering loss.
struct PseudoLabelAssignment {
    std::vector<Eigen::Index> sample_indices;
    std::vector<int> labels;
    std::vector<double> confidences;

    Eigen::Index size() const { return static_cast<Eigen::Index>(sample_indices.size()); }
    bool empty() const { return sample_indices.empty(); }
};

// ---- moment-matching discrepancies ------------------------------------
//
// All losses are symmetric in (source, target), non-negative, and zero on
// identical batches. The *_grad variants additionally fill the gradients
// with respect to every source and target feature; they compute the same
// value as the plain call.

// (1/L^p) * || mean tensor power(source) - mean tensor power(target) ||^2.
// Batch sizes may differ. Order 0 returns exactly 0.
double homm_full(const Matrix& source, const Matrix& target, int order,
                 std::size_t cap = kDefaultMomentCap);
double homm_full_grad(const Matrix& source, const Matrix& target, int order,
                      Matrix& grad_source, Matrix& grad_target,
                      std::size_t cap = kDefaultMomentCap);

// Group-wise moment matching over disjoint coordinate groups: the summed
// per-group tensor-power differences, scaled by 1/(b^2 * width^p). Equal
// batch sizes required. With one group and L divisible by the group count
// this reduces to homm_full.
double homm_group(const Matrix& source, const Matrix& target, int order, int group_count,
                  bool widen_last = false, std::size_t cap = kDefaultMomentCap);
double homm_group_grad(const Matrix& source, const Matrix& target, int order, int group_count,
                       Matrix& grad_source, Matrix& grad_target,
                       bool widen_last = false, std::size_t cap = kDefaultMomentCap);

// Stochastic surrogate: compares only the tensor entries named by idx,
// scaled by 1/(b^2 * N). Unbiased for homm_full under uniform index draws;
// exhaustive indices reproduce it exactly. Equal batch sizes required.
double homm_sampled(const Matrix& source, const Matrix& target, const IndexMatrix& idx);
double homm_sampled_grad(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
                         Matrix& grad_source, Matrix& grad_target);

// Kernelized matching of the sampled moment vectors: the biased two-sample
// kernel statistic on sampled_products rows. Clamped at zero so rounding
// never produces a negative value. Equal batch sizes required.
double khomm(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
             const KernelConfig& kernel);
double khomm_grad(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
                  const KernelConfig& kernel, Matrix& grad_source, Matrix& grad_target);

// (1/L) * || column means difference ||^2; identical to homm_full at order 1.
double linear_mmd(const Matrix& source, const Matrix& target);
double linear_mmd_grad(const Matrix& source, const Matrix& target,
                       Matrix& grad_source, Matrix& grad_target);

// (1/(b^2 L^2)) * || H_s^T H_s - H_t^T H_t ||_F^2. With centralize set the
// column means are removed first, turning Gram matching into covariance
// matching. Equal batch sizes required.
double gram_loss(const Matrix& source, const Matrix& target, bool centralize);
double gram_loss_grad(const Matrix& source, const Matrix& target, bool centralize,
                      Matrix& grad_source, Matrix& grad_target);

// ---- target-domain regularizers ----------------------------------------

// Mean conditional entropy of softmax rows; rows must sum to 1 within 1e-6
// with entries in [0, 1]. 0*log(0) counts as 0.
double entropy_loss(const Matrix& probs);
double entropy_loss_grad(const Matrix& probs, Matrix& grad_probs);

// Mean squared distance of each pseudo-labeled sample to its class center;
// 0 when the assignment is empty. Centers are constants here.
double clustering_loss(const Matrix& target_features, const PseudoLabelAssignment& assignment,
                       const ClassCenters& centers);
double clustering_loss_grad(const Matrix& target_features, const PseudoLabelAssignment& assignment,
                            const ClassCenters& centers, Matrix& grad_features);

// Moving-average center update: for each class j with assigned samples,
// delta_j = (sum of its features) / (1 + count_j) and
// c_j <- alpha * c_j + (1 - alpha) * delta_j. Classes with no assigned
// samples keep their center unless strict_empty is set, in which case the
// update is applied literally with delta_j = 0.
ClassCenters update_centers(const ClassCenters& centers, const Matrix& target_features,
                            const PseudoLabelAssignment& assignment, bool strict_empty = false);

} // namespace homm

#endif
