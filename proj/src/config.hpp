#ifndef HOMM_CONFIG_HPP
#define HOMM_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moments.hpp"

namespace homm {

// Every knob of one experiment, parsed from a flat key = value text file.
// serialize_config() emits a canonical form that reparses to an equal
// configuration (doubles are written with full round-trip precision).
struct ExperimentConfig {
    // data
    std::string dataset = "gaussian"; // gaussian | moons | csv
    std::string source_csv;
    std::string target_csv;
    int class_count = 3;
    int samples_per_class = 500;
    int input_dim = 2;
    double rotation = 0.0;
    double scale = 1.0;
    double noise_std = 0.3;
    std::vector<double> translation; // empty = zeros

    // network
    std::vector<Eigen::Index> hidden = {32, 32};
    Eigen::Index adapted_width = 64;
    double learning_rate = 1e-3;

    // objective
    std::string loss_variant = "full"; // full|group|sampled|kernelized|mmd|gram|coral
    int p = 3;
    int n_g = 1;
    long N = 1000;
    double gamma = 1e-4;
    int kernel_exponent = 2;
    double lambda_d = 0.0;
    double lambda_dc = 0.0;
    double entropy_weight = 0.0;
    double eta = 0.8;
    double alpha = 0.5;

    // schedule
    long warmup_steps = 0;
    long total_steps = 100;
    Eigen::Index batch_size = 64;
    std::uint64_t seed = 0;
    long log_every = 10;
    long eval_every = 100;

    // switches
    std::size_t moment_cap = kDefaultMomentCap;
    bool strict_center_update = false;
    bool widen_last_group = false;
};

// Parses the key = value text ('#' starts a comment). Unknown keys and
// malformed values raise ParseError with the 1-based line number.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Checks every invariant, naming the offending field in the message.
void validate_config(const ExperimentConfig& config);

// Canonical textual form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

// Key/value snapshot in canonical order (for run manifests).
std::map<std::string, std::string> config_to_map(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

} // namespace homm

#endif
