#include "discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace homm {

namespace {

void check_same_width(const Matrix& source, const Matrix& target) {
    if (source.rows() < 1 || target.rows() < 1) {
        throw ContractError("feature batches must be non-empty");
    }
    if (source.cols() != target.cols()) {
        throw ContractError("feature width mismatch: source has " +
                            std::to_string(source.cols()) + " columns, target has " +
                            std::to_string(target.cols()));
    }
}

void check_same_batch(const Matrix& source, const Matrix& target, const char* name) {
    if (source.rows() != target.rows()) {
        throw ContractError(std::string(name) + " requires equal batch sizes, got " +
                            std::to_string(source.rows()) + " and " +
                            std::to_string(target.rows()));
    }
}

void check_kernel(const KernelConfig& kernel) {
    if (!(kernel.gamma > 0.0)) {
        throw ContractError("kernel gamma must be positive, got " + std::to_string(kernel.gamma));
    }
    if (kernel.exponent != 1 && kernel.exponent != 2) {
        throw ContractError("kernel exponent must be 1 or 2, got " +
                            std::to_string(kernel.exponent));
    }
}

double tensor_cell_count(Eigen::Index length, int order) {
    double cells = 1.0;
    for (int level = 0; level < order; ++level) {
        cells *= static_cast<double>(length);
    }
    return cells;
}

} // namespace

double homm_full(const Matrix& source, const Matrix& target, int order, std::size_t cap) {
    check_same_width(source, target);
    if (order == 0) {
        return 0.0;
    }
    const Vector diff =
        mean_tensor_power(source, order, cap) - mean_tensor_power(target, order, cap);
    return diff.squaredNorm() / tensor_cell_count(source.cols(), order);
}

double homm_full_grad(const Matrix& source, const Matrix& target, int order,
                      Matrix& grad_source, Matrix& grad_target, std::size_t cap) {
    check_same_width(source, target);
    grad_source = Matrix::Zero(source.rows(), source.cols());
    grad_target = Matrix::Zero(target.rows(), target.cols());
    if (order == 0) {
        return 0.0;
    }
    const Eigen::Index width = source.cols();
    const Vector diff =
        mean_tensor_power(source, order, cap) - mean_tensor_power(target, order, cap);
    const double cells = tensor_cell_count(width, order);
    const double source_scale = 2.0 / (cells * static_cast<double>(source.rows()));
    const double target_scale = 2.0 / (cells * static_cast<double>(target.rows()));
    for (Eigen::Index i = 0; i < source.rows(); ++i) {
        grad_source.row(i) =
            source_scale *
            tensor_power_grad(diff, width, order, source.row(i).transpose()).transpose();
    }
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
        grad_target.row(i) =
            -target_scale *
            tensor_power_grad(diff, width, order, target.row(i).transpose()).transpose();
    }
    return diff.squaredNorm() / cells;
}

namespace {

double group_loss_impl(const Matrix& source, const Matrix& target, int order, int group_count,
                       bool widen_last, std::size_t cap,
                       Matrix* grad_source, Matrix* grad_target) {
    check_same_width(source, target);
    check_same_batch(source, target, "homm_group");
    const GroupPartition partition = partition_groups(source.cols(), group_count, widen_last);
    const double batch = static_cast<double>(source.rows());

    if (grad_source != nullptr) {
        *grad_source = Matrix::Zero(source.rows(), source.cols());
        *grad_target = Matrix::Zero(target.rows(), target.cols());
    }

    double loss = 0.0;
    for (const auto& range : partition.groups) {
        const Eigen::Index width = range.width();
        require_tensor_size(width, order, cap);
        const Matrix source_block = source.middleCols(range.begin, width);
        const Matrix target_block = target.middleCols(range.begin, width);
        const Vector diff = sum_tensor_power(source_block, order, cap) -
                            sum_tensor_power(target_block, order, cap);
        const double scale = 1.0 / (batch * batch * tensor_cell_count(width, order));
        loss += scale * diff.squaredNorm();
        if (grad_source != nullptr) {
            for (Eigen::Index i = 0; i < source.rows(); ++i) {
                grad_source->row(i).segment(range.begin, width) +=
                    2.0 * scale *
                    tensor_power_grad(diff, width, order, source_block.row(i).transpose())
                        .transpose();
            }
            for (Eigen::Index i = 0; i < target.rows(); ++i) {
                grad_target->row(i).segment(range.begin, width) -=
                    2.0 * scale *
                    tensor_power_grad(diff, width, order, target_block.row(i).transpose())
                        .transpose();
            }
        }
    }
    return loss;
}

} // namespace

double homm_group(const Matrix& source, const Matrix& target, int order, int group_count,
                  bool widen_last, std::size_t cap) {
    return group_loss_impl(source, target, order, group_count, widen_last, cap, nullptr, nullptr);
}

double homm_group_grad(const Matrix& source, const Matrix& target, int order, int group_count,
                       Matrix& grad_source, Matrix& grad_target, bool widen_last,
                       std::size_t cap) {
    return group_loss_impl(source, target, order, group_count, widen_last, cap,
                           &grad_source, &grad_target);
}

double homm_sampled(const Matrix& source, const Matrix& target, const IndexMatrix& idx) {
    check_same_width(source, target);
    check_same_batch(source, target, "homm_sampled");
    const Matrix source_products = sampled_products(source, idx);
    const Matrix target_products = sampled_products(target, idx);
    const Eigen::RowVectorXd diff =
        source_products.colwise().sum() - target_products.colwise().sum();
    const double batch = static_cast<double>(source.rows());
    return diff.squaredNorm() / (batch * batch * static_cast<double>(idx.rows()));
}

double homm_sampled_grad(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
                         Matrix& grad_source, Matrix& grad_target) {
    check_same_width(source, target);
    check_same_batch(source, target, "homm_sampled");
    const Matrix source_products = sampled_products(source, idx);
    const Matrix target_products = sampled_products(target, idx);
    const Eigen::RowVectorXd diff =
        source_products.colwise().sum() - target_products.colwise().sum();
    const double batch = static_cast<double>(source.rows());
    const double scale = 1.0 / (batch * batch * static_cast<double>(idx.rows()));

    grad_source = Matrix::Zero(source.rows(), source.cols());
    grad_target = Matrix::Zero(target.rows(), target.cols());
    // d loss / d products[i,k] = 2 * scale * diff_k, the same for every row.
    const Matrix upstream_source = (2.0 * scale * diff).replicate(source.rows(), 1);
    const Matrix upstream_target = (-2.0 * scale * diff).replicate(target.rows(), 1);
    sampled_products_backward(source, idx, upstream_source, grad_source);
    sampled_products_backward(target, idx, upstream_target, grad_target);
    return diff.squaredNorm() * scale;
}

namespace {

// Pairwise kernel matrix between the rows of two product matrices, plus the
// matching distance matrix (squared for exponent 2, Euclidean for 1).
// Distances come from explicit row differences: the Gram-expansion shortcut
// cancels catastrophically on close pairs and the equivalence guarantees
// here are at the 1e-12 level.
void kernel_block(const Matrix& left, const Matrix& right, const KernelConfig& kernel,
                  Matrix& values, Matrix& distances) {
    distances.resize(left.rows(), right.rows());
    for (Eigen::Index i = 0; i < left.rows(); ++i) {
        for (Eigen::Index j = 0; j < right.rows(); ++j) {
            distances(i, j) = (left.row(i) - right.row(j)).squaredNorm();
        }
    }
    if (kernel.exponent == 1) {
        distances = distances.cwiseSqrt();
    }
    values = (-kernel.gamma * distances).array().exp().matrix();
}

// Compensated sum over all entries; the three kernel sums nearly cancel
// for well-aligned domains and plain accumulation costs digits there.
double kahan_sum(const Matrix& m) {
    double sum = 0.0;
    double compensation = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double y = m(i, j) - compensation;
            const double t = sum + y;
            compensation = (t - sum) - y;
            sum = t;
        }
    }
    return sum;
}

} // namespace

double khomm(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
             const KernelConfig& kernel) {
    check_same_width(source, target);
    check_same_batch(source, target, "khomm");
    check_kernel(kernel);
    const Matrix source_products = sampled_products(source, idx);
    const Matrix target_products = sampled_products(target, idx);
    Matrix k_ss, k_st, k_tt, d_ss, d_st, d_tt;
    kernel_block(source_products, source_products, kernel, k_ss, d_ss);
    kernel_block(source_products, target_products, kernel, k_st, d_st);
    kernel_block(target_products, target_products, kernel, k_tt, d_tt);
    const double batch = static_cast<double>(source.rows());
    const double loss =
        (kahan_sum(k_ss) - 2.0 * kahan_sum(k_st) + kahan_sum(k_tt)) / (batch * batch);
    return std::max(loss, 0.0);
}

double khomm_grad(const Matrix& source, const Matrix& target, const IndexMatrix& idx,
                  const KernelConfig& kernel, Matrix& grad_source, Matrix& grad_target) {
    check_same_width(source, target);
    check_same_batch(source, target, "khomm");
    check_kernel(kernel);
    const Matrix source_products = sampled_products(source, idx);
    const Matrix target_products = sampled_products(target, idx);
    Matrix k_ss, k_st, k_tt, d_ss, d_st, d_tt;
    kernel_block(source_products, source_products, kernel, k_ss, d_ss);
    kernel_block(source_products, target_products, kernel, k_st, d_st);
    kernel_block(target_products, target_products, kernel, k_tt, d_tt);
    const double batch = static_cast<double>(source.rows());
    const double loss =
        (kahan_sum(k_ss) - 2.0 * kahan_sum(k_st) + kahan_sum(k_tt)) / (batch * batch);

    // Pair weights w(i,j) such that d k / d x = w * (x - y):
    //   exponent 2: w = -2 gamma k;  exponent 1: w = -gamma k / ||x - y||,
    // taken as 0 at coincident points (those terms are constant). The
    // coincidence test needs a floor: rounding in the distance computation
    // leaves self-pairs at ~1e-8 instead of 0, and dividing by that injects
    // enormous spurious weights.
    auto pair_weights = [&kernel](const Matrix& values, const Matrix& distances) {
        if (kernel.exponent == 2) {
            return (-2.0 * kernel.gamma * values).eval();
        }
        constexpr double kCoincident = 1e-12;
        Matrix weights(values.rows(), values.cols());
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            for (Eigen::Index j = 0; j < values.cols(); ++j) {
                const double dist = distances(i, j);
                weights(i, j) = dist > kCoincident ? -kernel.gamma * values(i, j) / dist : 0.0;
            }
        }
        return weights;
    };
    const Matrix w_ss = pair_weights(k_ss, d_ss);
    const Matrix w_st = pair_weights(k_st, d_st);
    const Matrix w_tt = pair_weights(k_tt, d_tt);

    // d loss / d S'_i = (2/b^2) [ sum_j w_ss(i,j)(S'_i - S'_j)
    //                           - sum_j w_st(i,j)(S'_i - T'_j) ]
    const double scale = 2.0 / (batch * batch);
    const Vector row_ss = w_ss.rowwise().sum();
    const Vector row_st = w_st.rowwise().sum();
    const Vector col_st = w_st.colwise().sum().transpose();
    const Vector row_tt = w_tt.rowwise().sum();

    Matrix upstream_source =
        scale * ((row_ss - row_st).asDiagonal() * source_products
                 - w_ss * source_products + w_st * target_products);
    Matrix upstream_target =
        scale * ((row_tt - col_st).asDiagonal() * target_products
                 - w_tt * target_products + w_st.transpose() * source_products);

    grad_source = Matrix::Zero(source.rows(), source.cols());
    grad_target = Matrix::Zero(target.rows(), target.cols());
    sampled_products_backward(source, idx, upstream_source, grad_source);
    sampled_products_backward(target, idx, upstream_target, grad_target);
    return std::max(loss, 0.0);
}

double linear_mmd(const Matrix& source, const Matrix& target) {
    check_same_width(source, target);
    const Eigen::RowVectorXd diff = source.colwise().mean() - target.colwise().mean();
    return diff.squaredNorm() / static_cast<double>(source.cols());
}

double linear_mmd_grad(const Matrix& source, const Matrix& target,
                       Matrix& grad_source, Matrix& grad_target) {
    check_same_width(source, target);
    const Eigen::RowVectorXd diff = source.colwise().mean() - target.colwise().mean();
    const double width = static_cast<double>(source.cols());
    grad_source = (2.0 / (width * static_cast<double>(source.rows())) * diff)
                      .replicate(source.rows(), 1);
    grad_target = (-2.0 / (width * static_cast<double>(target.rows())) * diff)
                      .replicate(target.rows(), 1);
    return diff.squaredNorm() / width;
}

double gram_loss(const Matrix& source, const Matrix& target, bool centralize) {
    check_same_width(source, target);
    check_same_batch(source, target, "gram_loss");
    Matrix s = source;
    Matrix t = target;
    if (centralize) {
        s.rowwise() -= source.colwise().mean();
        t.rowwise() -= target.colwise().mean();
    }
    const Matrix diff = s.transpose() * s - t.transpose() * t;
    const double batch = static_cast<double>(source.rows());
    const double width = static_cast<double>(source.cols());
    return diff.squaredNorm() / (batch * batch * width * width);
}

double gram_loss_grad(const Matrix& source, const Matrix& target, bool centralize,
                      Matrix& grad_source, Matrix& grad_target) {
    check_same_width(source, target);
    check_same_batch(source, target, "gram_loss");
    Matrix s = source;
    Matrix t = target;
    if (centralize) {
        s.rowwise() -= source.colwise().mean();
        t.rowwise() -= target.colwise().mean();
    }
    const Matrix diff = s.transpose() * s - t.transpose() * t;
    const double batch = static_cast<double>(source.rows());
    const double width = static_cast<double>(source.cols());
    const double scale = 4.0 / (batch * batch * width * width);
    grad_source = scale * (s * diff);
    grad_target = -scale * (t * diff);
    if (centralize) {
        // Back through the centering projection I - (1/b) 1 1^T.
        grad_source.rowwise() -= grad_source.colwise().mean().eval();
        grad_target.rowwise() -= grad_target.colwise().mean().eval();
    }
    return diff.squaredNorm() / (batch * batch * width * width);
}

namespace {

constexpr double kProbFloor = 1e-12;

void check_probability_rows(const Matrix& probs) {
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double row_sum = probs.row(i).sum();
        if (std::abs(row_sum - 1.0) > 1e-6) {
            throw ContractError("probability row " + std::to_string(i) +
                                " sums to " + std::to_string(row_sum) + ", expected 1");
        }
        if (probs.row(i).minCoeff() < -kProbFloor || probs.row(i).maxCoeff() > 1.0 + 1e-9) {
            throw ContractError("probability row " + std::to_string(i) +
                                " has entries outside [0, 1]");
        }
    }
}

} // namespace

double entropy_loss(const Matrix& probs) {
    if (probs.rows() < 1 || probs.cols() < 1) {
        throw ContractError("probability matrix must be non-empty");
    }
    check_probability_rows(probs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            const double p = probs(i, j);
            if (p > 0.0) {
                total -= p * std::log(p);
            }
        }
    }
    return total / static_cast<double>(probs.rows());
}

double entropy_loss_grad(const Matrix& probs, Matrix& grad_probs) {
    const double loss = entropy_loss(probs);
    const double inv_rows = 1.0 / static_cast<double>(probs.rows());
    grad_probs.resize(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        for (Eigen::Index j = 0; j < probs.cols(); ++j) {
            grad_probs(i, j) = -(std::log(std::max(probs(i, j), kProbFloor)) + 1.0) * inv_rows;
        }
    }
    return loss;
}

namespace {

void check_assignment(const Matrix& target_features, const PseudoLabelAssignment& assignment,
                      Eigen::Index class_count) {
    for (Eigen::Index k = 0; k < assignment.size(); ++k) {
        const Eigen::Index row = assignment.sample_indices[static_cast<std::size_t>(k)];
        if (row < 0 || row >= target_features.rows()) {
            throw ContractError("pseudo-label sample index " + std::to_string(row) +
                                " out of range for batch of " +
                                std::to_string(target_features.rows()));
        }
        const int label = assignment.labels[static_cast<std::size_t>(k)];
        if (label < 0 || static_cast<Eigen::Index>(label) >= class_count) {
            throw ContractError("pseudo-label class " + std::to_string(label) +
                                " out of range for " + std::to_string(class_count) + " centers");
        }
    }
}

} // namespace

double clustering_loss(const Matrix& target_features, const PseudoLabelAssignment& assignment,
                       const ClassCenters& centers) {
    if (assignment.empty()) {
        return 0.0;
    }
    if (centers.centers.cols() != target_features.cols()) {
        throw ContractError("center width mismatch");
    }
    check_assignment(target_features, assignment, centers.centers.rows());
    double total = 0.0;
    for (Eigen::Index k = 0; k < assignment.size(); ++k) {
        const Eigen::Index row = assignment.sample_indices[static_cast<std::size_t>(k)];
        const int label = assignment.labels[static_cast<std::size_t>(k)];
        total += (target_features.row(row) - centers.centers.row(label)).squaredNorm();
    }
    return total / static_cast<double>(assignment.size());
}

double clustering_loss_grad(const Matrix& target_features, const PseudoLabelAssignment& assignment,
                            const ClassCenters& centers, Matrix& grad_features) {
    grad_features = Matrix::Zero(target_features.rows(), target_features.cols());
    if (assignment.empty()) {
        return 0.0;
    }
    if (centers.centers.cols() != target_features.cols()) {
        throw ContractError("center width mismatch");
    }
    check_assignment(target_features, assignment, centers.centers.rows());
    const double scale = 2.0 / static_cast<double>(assignment.size());
    double total = 0.0;
    for (Eigen::Index k = 0; k < assignment.size(); ++k) {
        const Eigen::Index row = assignment.sample_indices[static_cast<std::size_t>(k)];
        const int label = assignment.labels[static_cast<std::size_t>(k)];
        const Eigen::RowVectorXd diff =
            target_features.row(row) - centers.centers.row(label);
        total += diff.squaredNorm();
        grad_features.row(row) += scale * diff;
    }
    return total / static_cast<double>(assignment.size());
}

ClassCenters update_centers(const ClassCenters& centers, const Matrix& target_features,
                            const PseudoLabelAssignment& assignment, bool strict_empty) {
    if (centers.centers.cols() != target_features.cols()) {
        throw ContractError("center width mismatch");
    }
    check_assignment(target_features, assignment, centers.centers.rows());
    const Eigen::Index class_count = centers.centers.rows();
    Matrix sums = Matrix::Zero(class_count, target_features.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(class_count), 0);
    for (Eigen::Index k = 0; k < assignment.size(); ++k) {
        const Eigen::Index row = assignment.sample_indices[static_cast<std::size_t>(k)];
        const int label = assignment.labels[static_cast<std::size_t>(k)];
        sums.row(label) += target_features.row(row);
        counts[static_cast<std::size_t>(label)] += 1;
    }
    ClassCenters updated = centers;
    for (Eigen::Index j = 0; j < class_count; ++j) {
        const Eigen::Index count = counts[static_cast<std::size_t>(j)];
        if (count == 0 && !strict_empty) {
            continue;
        }
        const Eigen::RowVectorXd delta = sums.row(j) / (1.0 + static_cast<double>(count));
        updated.centers.row(j) =
            centers.alpha * centers.centers.row(j) + (1.0 - centers.alpha) * delta;
    }
    return updated;
}

} // namespace homm
