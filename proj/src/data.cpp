#include "data.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "rng.hpp"

namespace homm {

FeatureSet strip_labels(const LabeledDataset& dataset) {
    return FeatureSet{dataset.features};
}

namespace {

void check_spec(const ShiftSpec& spec) {
    if (spec.dim < 2) {
        throw ContractError("dataset dim must be >= 2, got " + std::to_string(spec.dim));
    }
    if (spec.class_count < 2) {
        throw ContractError("class_count must be >= 2, got " + std::to_string(spec.class_count));
    }
    if (spec.samples_per_class < 1) {
        throw ContractError("samples_per_class must be >= 1");
    }
    if (!(spec.scale > 0.0)) {
        throw ContractError("scale must be positive, got " + std::to_string(spec.scale));
    }
    if (spec.noise_std < 0.0) {
        throw ContractError("noise_std must be non-negative");
    }
    if (!spec.translation.empty() &&
        spec.translation.size() != static_cast<std::size_t>(spec.dim)) {
        throw ContractError("translation length " + std::to_string(spec.translation.size()) +
                            " does not match dim " + std::to_string(spec.dim));
    }
}

// Applies the spec's shift in place: rotate in the (0, 1) plane, scale,
// translate.
void apply_shift(const ShiftSpec& spec, Matrix& features, Eigen::Index row) {
    const double c = std::cos(spec.rotation);
    const double s = std::sin(spec.rotation);
    const double x = features(row, 0);
    const double y = features(row, 1);
    features(row, 0) = c * x - s * y;
    features(row, 1) = s * x + c * y;
    features.row(row) *= spec.scale;
    if (!spec.translation.empty()) {
        for (int a = 0; a < spec.dim; ++a) {
            features(row, a) += spec.translation[static_cast<std::size_t>(a)];
        }
    }
}

// Mean scale keeps the clusters inside the near-linear range of a
// fan-in-initialized tanh network; saturated first layers fold distinct
// clusters together and make moment matching ambiguous.
constexpr double kMixtureRadius = 1.2;

// Components sit at distinct radii and irregular angles. Distinct radii
// give every class a rotation-invariant signature, so features that
// simultaneously match a rotated target distribution and separate the
// source classes exist; irregular angles keep the correspondence between
// rotated and original components unique.
Eigen::RowVectorXd mixture_mean(const ShiftSpec& spec, int cls) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(spec.dim);
    const double angle = 2.0 * std::numbers::pi * cls / spec.class_count -
                         0.3 * std::sin(2.0 * std::numbers::pi * cls / spec.class_count + 0.5);
    const double ring =
        spec.class_count > 1 ? 0.3 + 1.5 * cls / (spec.class_count - 1.0) : 1.0;
    const double radius = kMixtureRadius * ring;
    mean(0) = radius * std::cos(angle);
    mean(1) = radius * std::sin(angle);
    return mean;
}

// Per-class per-axis spread: outer components are tighter, with mild
// anisotropy across axes. Never above noise_std, so the zero-shift mean
// bound stays valid.
double mixture_sigma(const ShiftSpec& spec, int cls, int axis) {
    const double class_factor =
        spec.class_count > 1 ? 1.0 - 0.35 * cls / (spec.class_count - 1.0) : 1.0;
    const double axis_factor = (cls + axis) % 2 == 0 ? 1.0 : 0.85;
    return spec.noise_std * class_factor * axis_factor;
}

} // namespace

std::pair<LabeledDataset, LabeledDataset> gen_gaussian_mixture_pair(const ShiftSpec& spec) {
    check_spec(spec);
    const Eigen::Index total =
        static_cast<Eigen::Index>(spec.class_count) * spec.samples_per_class;

    LabeledDataset source, target;
    source.domain = DomainTag::source;
    target.domain = DomainTag::target;
    source.features.resize(total, spec.dim);
    target.features.resize(total, spec.dim);
    source.labels.resize(static_cast<std::size_t>(total));
    target.labels.resize(static_cast<std::size_t>(total));

    Rng source_rng(mix_seed(spec.seed, 0xA001));
    Rng target_rng(mix_seed(spec.seed, 0xA002));

    Eigen::Index row = 0;
    for (int cls = 0; cls < spec.class_count; ++cls) {
        const Eigen::RowVectorXd mean = mixture_mean(spec, cls);
        for (int n = 0; n < spec.samples_per_class; ++n, ++row) {
            for (int a = 0; a < spec.dim; ++a) {
                source.features(row, a) = mean(a) + mixture_sigma(spec, cls, a) * source_rng.normal();
                target.features(row, a) = mean(a) + mixture_sigma(spec, cls, a) * target_rng.normal();
            }
            apply_shift(spec, target.features, row);
            source.labels[static_cast<std::size_t>(row)] = cls;
            target.labels[static_cast<std::size_t>(row)] = cls;
        }
    }
    return {std::move(source), std::move(target)};
}

std::pair<LabeledDataset, LabeledDataset> gen_two_moons_pair(const ShiftSpec& spec) {
    if (spec.class_count != 2) {
        throw ContractError("two moons requires class_count = 2, got " +
                            std::to_string(spec.class_count));
    }
    if (spec.dim != 2) {
        throw ContractError("two moons requires dim = 2, got " + std::to_string(spec.dim));
    }
    check_spec(spec);
    const int per_class = spec.samples_per_class;
    const Eigen::Index total = 2 * static_cast<Eigen::Index>(per_class);

    LabeledDataset source, target;
    source.domain = DomainTag::source;
    target.domain = DomainTag::target;
    source.features.resize(total, 2);
    target.features.resize(total, 2);
    source.labels.resize(static_cast<std::size_t>(total));
    target.labels.resize(static_cast<std::size_t>(total));

    Rng source_rng(mix_seed(spec.seed, 0xB001));
    Rng target_rng(mix_seed(spec.seed, 0xB002));

    // Evenly spaced arc positions shared by both domains; the shape itself
    // carries no randomness.
    auto arc = [per_class](int n) {
        return per_class > 1 ? std::numbers::pi * n / (per_class - 1) : 0.0;
    };
    Eigen::Index row = 0;
    for (int cls = 0; cls < 2; ++cls) {
        for (int n = 0; n < per_class; ++n, ++row) {
            const double theta = arc(n);
            double x, y;
            if (cls == 0) {
                x = std::cos(theta);
                y = std::sin(theta);
            } else {
                x = 1.0 - std::cos(theta);
                y = 0.5 - std::sin(theta);
            }
            source.features(row, 0) = x + spec.noise_std * source_rng.normal();
            source.features(row, 1) = y + spec.noise_std * source_rng.normal();
            target.features(row, 0) = x + spec.noise_std * target_rng.normal();
            target.features(row, 1) = y + spec.noise_std * target_rng.normal();
            apply_shift(spec, target.features, row);
            source.labels[static_cast<std::size_t>(row)] = cls;
            target.labels[static_cast<std::size_t>(row)] = cls;
        }
    }
    return {std::move(source), std::move(target)};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.push_back("");
    }
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double_field(const std::string& raw, int line_number, std::size_t column) {
    const std::string token = trim(raw);
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (token.empty() || end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line_number) + ": field " +
                         std::to_string(column + 1) + " '" + token + "' is not a number");
    }
    return value;
}

int parse_label_field(const std::string& raw, int line_number, std::size_t column) {
    const std::string token = trim(raw);
    const char* begin = token.c_str();
    char* end = nullptr;
    const long value = std::strtol(begin, &end, 10);
    if (token.empty() || end == begin || *end != '\0' || value < 0) {
        throw ParseError("line " + std::to_string(line_number) + ": field " +
                         std::to_string(column + 1) + " '" + token +
                         "' is not a valid class label");
    }
    return static_cast<int>(value);
}

} // namespace

LabeledDataset load_features_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("line 1: empty file, expected a header row");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty()) {
        throw ParseError("line 1: empty header");
    }
    const bool has_labels = trim(header.back()) == "label";
    const std::size_t feature_count = header.size() - (has_labels ? 1 : 0);
    if (feature_count == 0) {
        throw ParseError("line 1: header has no feature columns");
    }

    std::vector<double> values;
    std::vector<int> labels;
    int line_number = 1;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_number) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < feature_count; ++j) {
            values.push_back(parse_double_field(fields[j], line_number, j));
        }
        if (has_labels) {
            labels.push_back(parse_label_field(fields.back(), line_number, fields.size() - 1));
        }
        ++rows;
    }
    if (rows == 0) {
        throw ParseError("line " + std::to_string(line_number) + ": no data rows");
    }

    LabeledDataset dataset;
    dataset.features.resize(rows, static_cast<Eigen::Index>(feature_count));
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < feature_count; ++j) {
            dataset.features(i, static_cast<Eigen::Index>(j)) =
                values[static_cast<std::size_t>(i) * feature_count + j];
        }
    }
    dataset.labels = std::move(labels);
    dataset.domain = has_labels ? DomainTag::source : DomainTag::target;
    return dataset;
}

void save_features_csv(const LabeledDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    const bool has_labels = dataset.has_labels();
    if (has_labels &&
        dataset.labels.size() != static_cast<std::size_t>(dataset.features.rows())) {
        throw ContractError("label count does not match feature rows");
    }
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
        if (j > 0) {
            out << ",";
        }
        out << "f" << j;
    }
    if (has_labels) {
        out << ",label";
    }
    out << "\n";
    char buffer[64];
    for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
            if (j > 0) {
                out << ",";
            }
            std::snprintf(buffer, sizeof(buffer), "%.17g", dataset.features(i, j));
            out << buffer;
        }
        if (has_labels) {
            out << "," << dataset.labels[static_cast<std::size_t>(i)];
        }
        out << "\n";
    }
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

} // namespace homm
