#ifndef HOMM_MOMENTS_HPP
#define HOMM_MOMENTS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace homm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sampled tensor coordinates: one row per sampled entry, one column per
// tensor axis, entries in [0, L).
using IndexMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Default cap on the number of scalars an exact tensor power may hold.
inline constexpr std::size_t kDefaultMomentCap = 10'000'000;

// Returns true and writes length^order into *size when it fits under cap.
bool tensor_size_within(Eigen::Index length, int order, std::size_t cap, std::size_t* size);

// Throws CapacityError naming (length, order, cap) when length^order > cap.
std::size_t require_tensor_size(Eigen::Index length, int order, std::size_t cap);

// p-fold tensor (outer) power of u, flattened row-major: the entry at
// multi-index (i, j, ..., k) is u_i * u_j * ... * u_k. Order 0 yields the
// single scalar 1.
Vector tensor_power(const Vector& u, int order, std::size_t cap = kDefaultMomentCap);

// Row-wise mean of tensor_power over the batch (one sample per row).
Vector mean_tensor_power(const Matrix& batch, int order, std::size_t cap = kDefaultMomentCap);

// Row-wise sum (no 1/b) of tensor_power over the batch.
Vector sum_tensor_power(const Matrix& batch, int order, std::size_t cap = kDefaultMomentCap);

// Gradient of <g, u^(x)p> with respect to u, for a flat tensor g that is
// symmetric under index permutation (moment tensors and their differences
// are). Computed as p contractions of g against u along the trailing axis.
Vector tensor_power_grad(const Vector& g, Eigen::Index length, int order, const Vector& u);

// count x order matrix of i.i.d. uniform draws from {0, ..., length-1}.
// A pure function of its arguments: identical inputs give bit-identical
// output on every platform.
IndexMatrix sample_indices(Eigen::Index length, int order, Eigen::Index count, std::uint64_t seed);

// All length^order coordinates in row-major order (column 0 most
// significant). Subject to the same capacity rule as tensor_power.
IndexMatrix exhaustive_indices(Eigen::Index length, int order, std::size_t cap = kDefaultMomentCap);

// Entry [i, k] is the product over columns j of batch(i, idx(k, j)):
// row i's sampled tensor entries.
Matrix sampled_products(const Matrix& batch, const IndexMatrix& idx);

// Accumulates d(sum_{ik} upstream[i,k] * products[i,k]) / d(batch) into
// grad, where products = sampled_products(batch, idx). grad must already
// be sized like batch.
void sampled_products_backward(const Matrix& batch, const IndexMatrix& idx,
                               const Matrix& upstream, Matrix& grad);

// Contiguous disjoint coordinate groups of the adapted layer.
struct GroupPartition {
    struct Range {
        Eigen::Index begin = 0;
        Eigen::Index end = 0; // exclusive
        Eigen::Index width() const { return end - begin; }
    };
    int group_count = 1;
    Eigen::Index width = 0; // floor(L / group_count)
    std::vector<Range> groups;
};

// Splits coordinates [0, length) into group_count contiguous ranges of
// width floor(length / group_count); trailing leftovers are dropped unless
// widen_last is set, in which case the final group absorbs them.
GroupPartition partition_groups(Eigen::Index length, int group_count, bool widen_last = false);

} // namespace homm

#endif
