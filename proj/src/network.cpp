#include "network.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace homm {

MlpNetwork make_mlp(const std::vector<Eigen::Index>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 3) {
        throw ContractError("network needs at least [input, adapted, classes] layer sizes");
    }
    for (const Eigen::Index size : layer_sizes) {
        if (size < 1) {
            throw ContractError("layer sizes must be positive");
        }
    }
    MlpNetwork net;
    net.layer_sizes = layer_sizes;
    Rng rng(mix_seed(seed, 0x1717));
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const Eigen::Index fan_in = layer_sizes[l];
        const Eigen::Index fan_out = layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix weight(fan_in, fan_out);
        for (Eigen::Index r = 0; r < fan_in; ++r) {
            for (Eigen::Index c = 0; c < fan_out; ++c) {
                weight(r, c) = rng.uniform(-bound, bound);
            }
        }
        net.weights.push_back(std::move(weight));
        net.biases.push_back(Vector::Zero(fan_out));
    }
    return net;
}

namespace {

Matrix softmax_rows(const Matrix& logits) {
    Matrix shifted = logits;
    shifted.colwise() -= logits.rowwise().maxCoeff();
    Matrix expd = shifted.array().exp().matrix();
    const Vector row_sums = expd.rowwise().sum();
    return expd.array().colwise() / row_sums.array();
}

} // namespace

ForwardTrace forward(const MlpNetwork& net, const Matrix& inputs) {
    if (inputs.cols() != net.input_dim()) {
        throw ContractError("input width " + std::to_string(inputs.cols()) +
                            " does not match network input dim " +
                            std::to_string(net.input_dim()));
    }
    if (inputs.rows() < 1) {
        throw ContractError("input batch must be non-empty");
    }
    ForwardTrace trace;
    trace.activations.reserve(net.layer_count());
    trace.activations.push_back(inputs);
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l) {
        Matrix z = trace.activations.back() * net.weights[l];
        z.rowwise() += net.biases[l].transpose();
        trace.activations.push_back(z.array().tanh().matrix());
    }
    const std::size_t out = net.layer_count() - 1;
    trace.logits = trace.activations.back() * net.weights[out];
    trace.logits.rowwise() += net.biases[out].transpose();
    trace.probs = softmax_rows(trace.logits);
    return trace;
}

namespace {

constexpr double kProbFloor = 1e-12;

} // namespace

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
        throw ContractError("label count " + std::to_string(labels.size()) +
                            " does not match batch of " + std::to_string(probs.rows()));
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || static_cast<Eigen::Index>(label) >= probs.cols()) {
            throw ContractError("label " + std::to_string(label) + " out of range for " +
                                std::to_string(probs.cols()) + " classes");
        }
        total -= std::log(std::max(probs(i, label), kProbFloor));
    }
    return total / static_cast<double>(probs.rows());
}

GradientSet zero_gradients(const MlpNetwork& net) {
    GradientSet grads;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        grads.weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
        grads.biases.push_back(Vector::Zero(net.biases[l].size()));
    }
    return grads;
}

const char* to_string(DiscrepancyKind kind) {
    switch (kind) {
    case DiscrepancyKind::full: return "full";
    case DiscrepancyKind::group: return "group";
    case DiscrepancyKind::sampled: return "sampled";
    case DiscrepancyKind::kernelized: return "kernelized";
    case DiscrepancyKind::mmd: return "mmd";
    case DiscrepancyKind::gram: return "gram";
    case DiscrepancyKind::coral: return "coral";
    }
    return "full";
}

DiscrepancyKind discrepancy_kind_from_string(const std::string& name) {
    if (name == "full") return DiscrepancyKind::full;
    if (name == "group") return DiscrepancyKind::group;
    if (name == "sampled") return DiscrepancyKind::sampled;
    if (name == "kernelized") return DiscrepancyKind::kernelized;
    if (name == "mmd") return DiscrepancyKind::mmd;
    if (name == "gram") return DiscrepancyKind::gram;
    if (name == "coral") return DiscrepancyKind::coral;
    throw ContractError("unknown loss variant '" + name +
                        "' (expected full|group|sampled|kernelized|mmd|gram|coral)");
}

namespace {

// Backpropagates one stream. dlogits and dadapted may be null when that
// path carries no gradient; the stream is expected to be skipped entirely
// by the caller when both are.
void backprop_stream(const MlpNetwork& net, const ForwardTrace& trace, const Matrix* dlogits,
                     const Matrix* dadapted, GradientSet& grads) {
    const std::size_t out = net.layer_count() - 1;
    Matrix dact;
    if (dlogits != nullptr) {
        grads.weights[out] += trace.activations[out].transpose() * (*dlogits);
        grads.biases[out] += dlogits->colwise().sum().transpose();
        dact = (*dlogits) * net.weights[out].transpose();
        if (dadapted != nullptr) {
            dact += *dadapted;
        }
    } else if (dadapted != nullptr) {
        dact = *dadapted;
    } else {
        return;
    }
    for (std::size_t l = out; l-- > 0;) {
        const Matrix& act = trace.activations[l + 1]; // tanh output of layer l
        const Matrix dz = (dact.array() * (1.0 - act.array().square())).matrix();
        if (!dz.allFinite()) {
            throw NumericError("non-finite gradient at layer " + std::to_string(l));
        }
        grads.weights[l] += trace.activations[l].transpose() * dz;
        grads.biases[l] += dz.colwise().sum().transpose();
        if (l > 0) {
            dact = dz * net.weights[l].transpose();
        }
    }
}

} // namespace

CompositeResult backward(const MlpNetwork& net, const ForwardTrace& source_trace,
                         const std::vector<int>& source_labels, const ForwardTrace& target_trace,
                         const CompositeLossConfig& config) {
    if (source_trace.adapted().cols() != target_trace.adapted().cols()) {
        throw ContractError("source and target adapted widths differ");
    }
    CompositeResult result;
    result.grads = zero_gradients(net);

    const bool want_discrepancy = config.lambda_d != 0.0;
    const bool want_clustering = config.lambda_dc != 0.0;
    const bool want_entropy = config.entropy_weight != 0.0;

    Matrix dlogits_source;
    if (config.source_ce) {
        result.source_ce = cross_entropy(source_trace.probs, source_labels);
        const Eigen::Index batch = source_trace.probs.rows();
        dlogits_source = source_trace.probs;
        for (Eigen::Index i = 0; i < batch; ++i) {
            dlogits_source(i, source_labels[static_cast<std::size_t>(i)]) -= 1.0;
        }
        dlogits_source /= static_cast<double>(batch);
    }

    Matrix dadapted_source, dadapted_target;
    if (want_discrepancy) {
        Matrix gs, gt;
        const Matrix& adapted_s = source_trace.adapted();
        const Matrix& adapted_t = target_trace.adapted();
        switch (config.variant) {
        case DiscrepancyKind::full:
            result.discrepancy =
                homm_full_grad(adapted_s, adapted_t, config.order, gs, gt, config.moment_cap);
            break;
        case DiscrepancyKind::group:
            result.discrepancy =
                homm_group_grad(adapted_s, adapted_t, config.order, config.group_count, gs, gt,
                                config.widen_last_group, config.moment_cap);
            break;
        case DiscrepancyKind::sampled:
            if (config.index_matrix == nullptr) {
                throw ContractError("sampled variant requires an index matrix");
            }
            result.discrepancy =
                homm_sampled_grad(adapted_s, adapted_t, *config.index_matrix, gs, gt);
            break;
        case DiscrepancyKind::kernelized:
            if (config.index_matrix == nullptr) {
                throw ContractError("kernelized variant requires an index matrix");
            }
            result.discrepancy =
                khomm_grad(adapted_s, adapted_t, *config.index_matrix, config.kernel, gs, gt);
            break;
        case DiscrepancyKind::mmd:
            result.discrepancy = linear_mmd_grad(adapted_s, adapted_t, gs, gt);
            break;
        case DiscrepancyKind::gram:
            result.discrepancy = gram_loss_grad(adapted_s, adapted_t, false, gs, gt);
            break;
        case DiscrepancyKind::coral:
            result.discrepancy = gram_loss_grad(adapted_s, adapted_t, true, gs, gt);
            break;
        }
        dadapted_source = config.lambda_d * gs;
        dadapted_target = config.lambda_d * gt;
    }

    if (want_clustering) {
        if (config.assignment == nullptr || config.centers == nullptr) {
            throw ContractError("clustering term requires assignment and centers");
        }
        Matrix gt;
        result.clustering =
            clustering_loss_grad(target_trace.adapted(), *config.assignment, *config.centers, gt);
        if (dadapted_target.size() == 0) {
            dadapted_target = config.lambda_dc * gt;
        } else {
            dadapted_target += config.lambda_dc * gt;
        }
    }

    Matrix dlogits_target;
    if (want_entropy) {
        Matrix dprobs;
        result.entropy = entropy_loss_grad(target_trace.probs, dprobs);
        // Chain through the softmax: dz = p .* (dp - <dp, p>) per row.
        const Matrix& probs = target_trace.probs;
        dlogits_target.resize(probs.rows(), probs.cols());
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            const double inner = dprobs.row(i).dot(probs.row(i));
            dlogits_target.row(i) =
                probs.row(i).cwiseProduct(dprobs.row(i).array().matrix() -
                                          Eigen::RowVectorXd::Constant(probs.cols(), inner));
        }
        dlogits_target *= config.entropy_weight;
    }

    result.composite = result.source_ce + config.lambda_d * result.discrepancy +
                       config.lambda_dc * result.clustering +
                       config.entropy_weight * result.entropy;

    const bool source_active = config.source_ce || dadapted_source.size() != 0;
    const bool target_active = dadapted_target.size() != 0 || dlogits_target.size() != 0;
    if (source_active) {
        backprop_stream(net, source_trace, config.source_ce ? &dlogits_source : nullptr,
                        dadapted_source.size() != 0 ? &dadapted_source : nullptr, result.grads);
    }
    if (target_active) {
        backprop_stream(net, target_trace, dlogits_target.size() != 0 ? &dlogits_target : nullptr,
                        dadapted_target.size() != 0 ? &dadapted_target : nullptr, result.grads);
    }
    return result;
}

CompositeResult backward(const MlpNetwork& net, const Matrix& source_inputs,
                         const std::vector<int>& source_labels, const Matrix& target_inputs,
                         const CompositeLossConfig& config) {
    const ForwardTrace source_trace = forward(net, source_inputs);
    const ForwardTrace target_trace = forward(net, target_inputs);
    return backward(net, source_trace, source_labels, target_trace, config);
}

OptimizerState make_optimizer(const MlpNetwork& net, double learning_rate) {
    OptimizerState state;
    state.learning_rate = learning_rate;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        state.first_moment_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
        state.second_moment_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
        state.first_moment_b.push_back(Vector::Zero(net.biases[l].size()));
        state.second_moment_b.push_back(Vector::Zero(net.biases[l].size()));
    }
    return state;
}

void optimizer_step(MlpNetwork& net, OptimizerState& state, const GradientSet& grads) {
    if (grads.weights.size() != net.layer_count() || grads.biases.size() != net.layer_count()) {
        throw ContractError("gradient set does not match network layout");
    }
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
            throw NumericError("non-finite gradient rejected at layer " + std::to_string(l));
        }
    }
    state.step += 1;
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double lr = state.learning_rate;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        auto& mw = state.first_moment_w[l];
        auto& vw = state.second_moment_w[l];
        mw = state.beta1 * mw + (1.0 - state.beta1) * grads.weights[l];
        vw = (state.beta2 * vw.array() +
              (1.0 - state.beta2) * grads.weights[l].array().square()).matrix();
        net.weights[l].array() -= lr * (mw.array() / correction1) /
                                  ((vw.array() / correction2).sqrt() + state.epsilon);

        auto& mb = state.first_moment_b[l];
        auto& vb = state.second_moment_b[l];
        mb = state.beta1 * mb + (1.0 - state.beta1) * grads.biases[l];
        vb = (state.beta2 * vb.array() +
              (1.0 - state.beta2) * grads.biases[l].array().square()).matrix();
        net.biases[l].array() -= lr * (mb.array() / correction1) /
                                 ((vb.array() / correction2).sqrt() + state.epsilon);
    }
}

namespace {

double relative_error(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= 1e-9) {
        return 0.0;
    }
    return diff / std::max(std::abs(analytic), std::abs(numeric));
}

} // namespace

GradCheckReport finite_diff_check(const MlpNetwork& net,
                                  const std::function<double(const MlpNetwork&)>& loss,
                                  const GradientSet& analytic, double step, double tolerance) {
    MlpNetwork work = net;
    GradCheckReport report;
    auto probe = [&](double& param, double analytic_value, std::size_t layer, bool is_bias,
                     Eigen::Index row, Eigen::Index col) {
        const double saved = param;
        param = saved + step;
        const double plus = loss(work);
        param = saved - step;
        const double minus = loss(work);
        param = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double rel = relative_error(analytic_value, numeric);
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.checked += 1;
        if (rel > tolerance) {
            report.failures.push_back({layer, is_bias, row, col, analytic_value, numeric, rel});
        }
    };
    for (std::size_t l = 0; l < work.layer_count(); ++l) {
        for (Eigen::Index r = 0; r < work.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < work.weights[l].cols(); ++c) {
                probe(work.weights[l](r, c), analytic.weights[l](r, c), l, false, r, c);
            }
        }
        for (Eigen::Index r = 0; r < work.biases[l].size(); ++r) {
            probe(work.biases[l](r), analytic.biases[l](r), l, true, r, 0);
        }
    }
    return report;
}

// ---- checkpoint serialization -------------------------------------------

std::string serialize_network(const MlpNetwork& net) {
    std::ostringstream out;
    out << "homm-mlp 1\n";
    out << "layers " << net.layer_sizes.size() << "\n";
    for (std::size_t i = 0; i < net.layer_sizes.size(); ++i) {
        out << (i == 0 ? "" : " ") << net.layer_sizes[i];
    }
    out << "\n";
    char buffer[64];
    auto put = [&](double value) {
        std::snprintf(buffer, sizeof(buffer), "%a", value);
        out << buffer;
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        out << "W" << l << " " << net.weights[l].rows() << " " << net.weights[l].cols() << "\n";
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                if (c > 0) {
                    out << " ";
                }
                put(net.weights[l](r, c));
            }
            out << "\n";
        }
        out << "b" << l << " " << net.biases[l].size() << "\n";
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
            if (r > 0) {
                out << " ";
            }
            put(net.biases[l](r));
        }
        out << "\n";
    }
    return out.str();
}

namespace {

double parse_hex_double(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ParseError("checkpoint: bad numeric token '" + token + "'");
    }
    return value;
}

} // namespace

MlpNetwork deserialize_network(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "homm-mlp" || version != 1) {
        throw ParseError("checkpoint: unrecognized header");
    }
    std::string tag;
    std::size_t layer_entries = 0;
    in >> tag >> layer_entries;
    if (tag != "layers" || layer_entries < 3) {
        throw ParseError("checkpoint: bad layer count");
    }
    MlpNetwork net;
    net.layer_sizes.resize(layer_entries);
    for (auto& size : net.layer_sizes) {
        if (!(in >> size)) {
            throw ParseError("checkpoint: truncated layer sizes");
        }
    }
    std::string token;
    for (std::size_t l = 0; l + 1 < layer_entries; ++l) {
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> tag >> rows >> cols) || tag != "W" + std::to_string(l)) {
            throw ParseError("checkpoint: expected weight block W" + std::to_string(l));
        }
        Matrix weight(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                if (!(in >> token)) {
                    throw ParseError("checkpoint: truncated weights");
                }
                weight(r, c) = parse_hex_double(token);
            }
        }
        Eigen::Index bias_size = 0;
        if (!(in >> tag >> bias_size) || tag != "b" + std::to_string(l)) {
            throw ParseError("checkpoint: expected bias block b" + std::to_string(l));
        }
        Vector bias(bias_size);
        for (Eigen::Index r = 0; r < bias_size; ++r) {
            if (!(in >> token)) {
                throw ParseError("checkpoint: truncated biases");
            }
            bias(r) = parse_hex_double(token);
        }
        net.weights.push_back(std::move(weight));
        net.biases.push_back(std::move(bias));
    }
    if (net.weights.size() + 1 != net.layer_sizes.size()) {
        throw ParseError("checkpoint: layer blocks do not match layer sizes");
    }
    return net;
}

void save_network(const MlpNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << serialize_network(net);
    if (!out) {
        throw IoError("failed writing checkpoint to '" + path + "'");
    }
}

MlpNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize_network(buffer.str());
}

} // namespace homm
