#include "config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "network.hpp"

namespace homm {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

double to_double(const std::string& value, int line, const std::string& key) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double parsed = std::strtod(begin, &end);
    if (value.empty() || end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line) + ": value '" + value + "' for key '" +
                         key + "' is not a number");
    }
    return parsed;
}

long to_long(const std::string& value, int line, const std::string& key) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const long parsed = std::strtol(begin, &end, 10);
    if (value.empty() || end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line) + ": value '" + value + "' for key '" +
                         key + "' is not an integer");
    }
    return parsed;
}

std::uint64_t to_u64(const std::string& value, int line, const std::string& key) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(begin, &end, 10);
    if (value.empty() || end == begin || *end != '\0') {
        throw ParseError("line " + std::to_string(line) + ": value '" + value + "' for key '" +
                         key + "' is not an unsigned integer");
    }
    return static_cast<std::uint64_t>(parsed);
}

bool to_bool(const std::string& value, int line, const std::string& key) {
    if (value == "1" || value == "true" || value == "on") {
        return true;
    }
    if (value == "0" || value == "false" || value == "off") {
        return false;
    }
    throw ParseError("line " + std::to_string(line) + ": value '" + value + "' for key '" + key +
                     "' is not a boolean (use 0/1)");
}

template <typename T>
std::vector<T> to_list(const std::string& value, int line, const std::string& key) {
    std::vector<T> out;
    if (trim(value).empty()) {
        return out;
    }
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if constexpr (std::is_same_v<T, double>) {
            out.push_back(to_double(item, line, key));
        } else {
            out.push_back(static_cast<T>(to_long(item, line, key)));
        }
    }
    return out;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("line " + std::to_string(line_number) +
                             ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const int ln = line_number;

        if (key == "dataset") config.dataset = value;
        else if (key == "source_csv") config.source_csv = value;
        else if (key == "target_csv") config.target_csv = value;
        else if (key == "class_count") config.class_count = static_cast<int>(to_long(value, ln, key));
        else if (key == "samples_per_class") config.samples_per_class = static_cast<int>(to_long(value, ln, key));
        else if (key == "input_dim") config.input_dim = static_cast<int>(to_long(value, ln, key));
        else if (key == "rotation") config.rotation = to_double(value, ln, key);
        else if (key == "scale") config.scale = to_double(value, ln, key);
        else if (key == "noise_std") config.noise_std = to_double(value, ln, key);
        else if (key == "translation") config.translation = to_list<double>(value, ln, key);
        else if (key == "hidden") config.hidden = to_list<Eigen::Index>(value, ln, key);
        else if (key == "adapted_width") config.adapted_width = to_long(value, ln, key);
        else if (key == "learning_rate") config.learning_rate = to_double(value, ln, key);
        else if (key == "loss_variant") config.loss_variant = value;
        else if (key == "p") config.p = static_cast<int>(to_long(value, ln, key));
        else if (key == "n_g") config.n_g = static_cast<int>(to_long(value, ln, key));
        else if (key == "N") config.N = to_long(value, ln, key);
        else if (key == "gamma") config.gamma = to_double(value, ln, key);
        else if (key == "kernel_exponent") config.kernel_exponent = static_cast<int>(to_long(value, ln, key));
        else if (key == "lambda_d") config.lambda_d = to_double(value, ln, key);
        else if (key == "lambda_dc") config.lambda_dc = to_double(value, ln, key);
        else if (key == "entropy_weight") config.entropy_weight = to_double(value, ln, key);
        else if (key == "eta") config.eta = to_double(value, ln, key);
        else if (key == "alpha") config.alpha = to_double(value, ln, key);
        else if (key == "warmup_steps") config.warmup_steps = to_long(value, ln, key);
        else if (key == "total_steps") config.total_steps = to_long(value, ln, key);
        else if (key == "batch_size") config.batch_size = to_long(value, ln, key);
        else if (key == "seed") config.seed = to_u64(value, ln, key);
        else if (key == "log_every") config.log_every = to_long(value, ln, key);
        else if (key == "eval_every") config.eval_every = to_long(value, ln, key);
        else if (key == "moment_cap") config.moment_cap = static_cast<std::size_t>(to_u64(value, ln, key));
        else if (key == "strict_center_update") config.strict_center_update = to_bool(value, ln, key);
        else if (key == "widen_last_group") config.widen_last_group = to_bool(value, ln, key);
        else {
            throw ParseError("line " + std::to_string(ln) + ": unknown key '" + key + "'");
        }
    }
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void validate_config(const ExperimentConfig& config) {
    auto fail = [](const std::string& message) { throw ContractError(message); };

    if (config.dataset != "gaussian" && config.dataset != "moons" && config.dataset != "csv") {
        fail("dataset must be one of gaussian|moons|csv, got '" + config.dataset + "'");
    }
    if (config.dataset == "csv") {
        if (config.source_csv.empty()) fail("source_csv is required when dataset = csv");
        if (config.target_csv.empty()) fail("target_csv is required when dataset = csv");
    }
    if (config.class_count < 2) fail("class_count must be >= 2, got " + std::to_string(config.class_count));
    if (config.samples_per_class < 1) fail("samples_per_class must be >= 1");
    if (config.input_dim < 2) fail("input_dim must be >= 2, got " + std::to_string(config.input_dim));
    if (!(config.scale > 0.0)) fail("scale must be positive, got " + format_double(config.scale));
    if (config.noise_std < 0.0) fail("noise_std must be non-negative");
    if (!config.translation.empty() &&
        config.translation.size() != static_cast<std::size_t>(config.input_dim)) {
        fail("translation must have input_dim entries or be empty");
    }
    if (config.adapted_width < 1) fail("adapted_width must be >= 1");
    for (const auto h : config.hidden) {
        if (h < 1) fail("hidden layer sizes must be positive");
    }
    if (!(config.learning_rate > 0.0)) fail("learning_rate must be positive");
    discrepancy_kind_from_string(config.loss_variant); // throws with the field value
    if (config.p < 0) fail("p must be non-negative, got " + std::to_string(config.p));
    if (config.n_g < 1) fail("n_g must be >= 1, got " + std::to_string(config.n_g));
    if (config.n_g > config.adapted_width) {
        fail("n_g must not exceed adapted_width (" + std::to_string(config.n_g) + " > " +
             std::to_string(config.adapted_width) + ")");
    }
    if (config.N < 1) fail("N must be >= 1, got " + std::to_string(config.N));
    if (!(config.gamma > 0.0)) fail("gamma must be positive, got " + format_double(config.gamma));
    if (config.kernel_exponent != 1 && config.kernel_exponent != 2) {
        fail("kernel_exponent must be 1 or 2, got " + std::to_string(config.kernel_exponent));
    }
    if (config.lambda_d < 0.0) fail("lambda_d must be non-negative");
    if (config.lambda_dc < 0.0) fail("lambda_dc must be non-negative");
    if (config.entropy_weight < 0.0) fail("entropy_weight must be non-negative");
    if (!(config.eta > 0.0 && config.eta < 1.0)) {
        fail("eta must lie in (0,1), got " + format_double(config.eta));
    }
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
        fail("alpha must lie in [0,1], got " + format_double(config.alpha));
    }
    if (config.warmup_steps < 0) fail("warmup_steps must be non-negative");
    if (config.total_steps < 0) fail("total_steps must be non-negative");
    if (config.warmup_steps > config.total_steps) {
        fail("warmup_steps (" + std::to_string(config.warmup_steps) +
             ") must not exceed total_steps (" + std::to_string(config.total_steps) + ")");
    }
    if (config.batch_size < 2) fail("batch_size must be >= 2, got " + std::to_string(config.batch_size));
    if (config.log_every < 1) fail("log_every must be >= 1");
    if (config.eval_every < 1) fail("eval_every must be >= 1");
    if (config.moment_cap < 1) fail("moment_cap must be >= 1");

    // exact-tensor variants must fit under the cap up front
    const auto kind = discrepancy_kind_from_string(config.loss_variant);
    if (kind == DiscrepancyKind::full) {
        require_tensor_size(config.adapted_width, config.p, config.moment_cap);
    } else if (kind == DiscrepancyKind::group) {
        require_tensor_size(config.adapted_width / config.n_g, config.p, config.moment_cap);
    }
}

namespace {

template <typename T>
std::string join_list(const std::vector<T>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out << ",";
        }
        if constexpr (std::is_same_v<T, double>) {
            out << format_double(values[i]);
        } else {
            out << values[i];
        }
    }
    return out.str();
}

} // namespace

std::map<std::string, std::string> config_to_map(const ExperimentConfig& c) {
    std::map<std::string, std::string> m;
    m["dataset"] = c.dataset;
    m["source_csv"] = c.source_csv;
    m["target_csv"] = c.target_csv;
    m["class_count"] = std::to_string(c.class_count);
    m["samples_per_class"] = std::to_string(c.samples_per_class);
    m["input_dim"] = std::to_string(c.input_dim);
    m["rotation"] = format_double(c.rotation);
    m["scale"] = format_double(c.scale);
    m["noise_std"] = format_double(c.noise_std);
    m["translation"] = join_list(c.translation);
    m["hidden"] = join_list(c.hidden);
    m["adapted_width"] = std::to_string(c.adapted_width);
    m["learning_rate"] = format_double(c.learning_rate);
    m["loss_variant"] = c.loss_variant;
    m["p"] = std::to_string(c.p);
    m["n_g"] = std::to_string(c.n_g);
    m["N"] = std::to_string(c.N);
    m["gamma"] = format_double(c.gamma);
    m["kernel_exponent"] = std::to_string(c.kernel_exponent);
    m["lambda_d"] = format_double(c.lambda_d);
    m["lambda_dc"] = format_double(c.lambda_dc);
    m["entropy_weight"] = format_double(c.entropy_weight);
    m["eta"] = format_double(c.eta);
    m["alpha"] = format_double(c.alpha);
    m["warmup_steps"] = std::to_string(c.warmup_steps);
    m["total_steps"] = std::to_string(c.total_steps);
    m["batch_size"] = std::to_string(c.batch_size);
    m["seed"] = std::to_string(c.seed);
    m["log_every"] = std::to_string(c.log_every);
    m["eval_every"] = std::to_string(c.eval_every);
    m["moment_cap"] = std::to_string(c.moment_cap);
    m["strict_center_update"] = c.strict_center_update ? "1" : "0";
    m["widen_last_group"] = c.widen_last_group ? "1" : "0";
    return m;
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    for (const auto& [key, value] : config_to_map(config)) {
        out << key << " = " << value << "\n";
    }
    return out.str();
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return config_to_map(a) == config_to_map(b);
}

} // namespace homm
