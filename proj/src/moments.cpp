#include "moments.hpp"

#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace homm {

bool tensor_size_within(Eigen::Index length, int order, std::size_t cap, std::size_t* size) {
    std::size_t total = 1;
    for (int level = 0; level < order; ++level) {
        if (length > 0 && total > cap / static_cast<std::size_t>(length)) {
            return false;
        }
        total *= static_cast<std::size_t>(length);
    }
    if (total > cap) {
        return false;
    }
    if (size != nullptr) {
        *size = total;
    }
    return true;
}

std::size_t require_tensor_size(Eigen::Index length, int order, std::size_t cap) {
    if (order < 0) {
        throw ContractError("moment order must be non-negative, got " + std::to_string(order));
    }
    if (length < 1) {
        throw ContractError("vector length must be positive, got " + std::to_string(length));
    }
    std::size_t size = 0;
    if (!tensor_size_within(length, order, cap, &size)) {
        std::ostringstream msg;
        msg << "tensor power exceeds memory cap: L=" << length << ", p=" << order
            << ", cap=" << cap << " scalars";
        throw CapacityError(msg.str());
    }
    return size;
}

Vector tensor_power(const Vector& u, int order, std::size_t cap) {
    const Eigen::Index length = u.size();
    const std::size_t size = require_tensor_size(length, order, cap);

    Vector out(1);
    out(0) = 1.0;
    for (int level = 0; level < order; ++level) {
        Vector next(out.size() * length);
        for (Eigen::Index a = 0; a < out.size(); ++a) {
            const double left = out(a);
            for (Eigen::Index j = 0; j < length; ++j) {
                next(a * length + j) = left * u(j);
            }
        }
        out.swap(next);
    }
    (void)size;
    return out;
}

Vector mean_tensor_power(const Matrix& batch, int order, std::size_t cap) {
    if (batch.rows() < 1 || batch.cols() < 1) {
        throw ContractError("feature batch must be non-empty");
    }
    const std::size_t size = require_tensor_size(batch.cols(), order, cap);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(size));
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        sum += tensor_power(batch.row(i).transpose(), order, cap);
    }
    return sum / static_cast<double>(batch.rows());
}

Vector sum_tensor_power(const Matrix& batch, int order, std::size_t cap) {
    if (batch.rows() < 1 || batch.cols() < 1) {
        throw ContractError("feature batch must be non-empty");
    }
    const std::size_t size = require_tensor_size(batch.cols(), order, cap);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(size));
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        sum += tensor_power(batch.row(i).transpose(), order, cap);
    }
    return sum;
}

Vector tensor_power_grad(const Vector& g, Eigen::Index length, int order, const Vector& u) {
    if (u.size() != length) {
        throw ContractError("tensor_power_grad: vector length mismatch");
    }
    if (order == 0) {
        return Vector::Zero(length);
    }
    // Contract the trailing axis (contiguous in row-major layout) order-1
    // times, then scale by the order; valid because g is permutation-symmetric.
    Vector current = g;
    for (int level = 0; level < order - 1; ++level) {
        const Eigen::Index rows = current.size() / length;
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            view(current.data(), rows, length);
        current = (view * u).eval();
    }
    return static_cast<double>(order) * current;
}

IndexMatrix sample_indices(Eigen::Index length, int order, Eigen::Index count, std::uint64_t seed) {
    if (length < 1) {
        throw ContractError("sample_indices: length must be >= 1");
    }
    if (order < 1) {
        throw ContractError("sample_indices: order must be >= 1");
    }
    if (count < 1) {
        throw ContractError("sample_indices: count must be >= 1");
    }
    Rng rng(seed);
    IndexMatrix idx(count, order);
    for (Eigen::Index k = 0; k < count; ++k) {
        for (int j = 0; j < order; ++j) {
            idx(k, j) = static_cast<std::int32_t>(rng.bounded(static_cast<std::uint64_t>(length)));
        }
    }
    return idx;
}

IndexMatrix exhaustive_indices(Eigen::Index length, int order, std::size_t cap) {
    if (order < 1) {
        throw ContractError("exhaustive_indices: order must be >= 1");
    }
    const std::size_t total = require_tensor_size(length, order, cap);
    IndexMatrix idx(static_cast<Eigen::Index>(total), order);
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rest = k;
        for (int j = order - 1; j >= 0; --j) {
            idx(static_cast<Eigen::Index>(k), j) =
                static_cast<std::int32_t>(rest % static_cast<std::size_t>(length));
            rest /= static_cast<std::size_t>(length);
        }
    }
    return idx;
}

namespace {

void check_index_range(const IndexMatrix& idx, Eigen::Index length) {
    if (idx.rows() < 1 || idx.cols() < 1) {
        throw ContractError("index matrix must be non-empty");
    }
    if (idx.minCoeff() < 0 || idx.maxCoeff() >= length) {
        throw ContractError("index matrix entry out of range for feature width " +
                            std::to_string(length));
    }
}

} // namespace

Matrix sampled_products(const Matrix& batch, const IndexMatrix& idx) {
    check_index_range(idx, batch.cols());
    const Eigen::Index rows = batch.rows();
    const Eigen::Index count = idx.rows();
    const int order = static_cast<int>(idx.cols());

    Matrix products(rows, count);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < count; ++k) {
            double acc = 1.0;
            for (int j = 0; j < order; ++j) {
                acc *= batch(i, idx(k, j));
            }
            products(i, k) = acc;
        }
    }
    return products;
}

void sampled_products_backward(const Matrix& batch, const IndexMatrix& idx,
                               const Matrix& upstream, Matrix& grad) {
    check_index_range(idx, batch.cols());
    if (upstream.rows() != batch.rows() || upstream.cols() != idx.rows()) {
        throw ContractError("sampled_products_backward: upstream shape mismatch");
    }
    if (grad.rows() != batch.rows() || grad.cols() != batch.cols()) {
        throw ContractError("sampled_products_backward: grad shape mismatch");
    }
    const int order = static_cast<int>(idx.cols());
    std::vector<double> prefix(static_cast<std::size_t>(order) + 1);
    std::vector<double> suffix(static_cast<std::size_t>(order) + 1);
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        for (Eigen::Index k = 0; k < idx.rows(); ++k) {
            const double up = upstream(i, k);
            if (up == 0.0) {
                continue;
            }
            // prefix/suffix products handle repeated and zero coordinates.
            prefix[0] = 1.0;
            for (int j = 0; j < order; ++j) {
                prefix[static_cast<std::size_t>(j) + 1] =
                    prefix[static_cast<std::size_t>(j)] * batch(i, idx(k, j));
            }
            suffix[static_cast<std::size_t>(order)] = 1.0;
            for (int j = order - 1; j >= 0; --j) {
                suffix[static_cast<std::size_t>(j)] =
                    suffix[static_cast<std::size_t>(j) + 1] * batch(i, idx(k, j));
            }
            for (int j = 0; j < order; ++j) {
                grad(i, idx(k, j)) += up * prefix[static_cast<std::size_t>(j)] *
                                      suffix[static_cast<std::size_t>(j) + 1];
            }
        }
    }
}

GroupPartition partition_groups(Eigen::Index length, int group_count, bool widen_last) {
    if (group_count < 1) {
        throw ContractError("group count must be >= 1, got " + std::to_string(group_count));
    }
    if (static_cast<Eigen::Index>(group_count) > length) {
        throw ContractError("group count " + std::to_string(group_count) +
                            " exceeds feature width " + std::to_string(length));
    }
    GroupPartition partition;
    partition.group_count = group_count;
    partition.width = length / group_count;
    partition.groups.reserve(static_cast<std::size_t>(group_count));
    for (int k = 0; k < group_count; ++k) {
        GroupPartition::Range range;
        range.begin = static_cast<Eigen::Index>(k) * partition.width;
        range.end = range.begin + partition.width;
        if (widen_last && k == group_count - 1) {
            range.end = length;
        }
        partition.groups.push_back(range);
    }
    return partition;
}

} // namespace homm
