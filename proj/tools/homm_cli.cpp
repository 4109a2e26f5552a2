// Command-line front end for the homm shared library: run experiments,
// sweep hyperparameter grids, verify the library's analytic properties,
// and measure discrepancies between feature files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "homm/homm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(homm_status status) {
    switch (status) {
    case HOMM_OK:
        return kExitOk;
    case HOMM_ERROR_INVALID:
    case HOMM_ERROR_PARSE:
    case HOMM_ERROR_CAPACITY:
        return kExitValidation;
    default:
        return kExitRuntime;
    }
}

int report_failure(const std::string& what, homm_status status) {
    std::cerr << "error: " << what << ": " << homm_last_error() << "\n";
    return exit_code_for(status);
}

struct ConfigHandle {
    homm_config* ptr = nullptr;
    ~ConfigHandle() { homm_config_free(ptr); }
};

struct DatasetHandle {
    homm_dataset* ptr = nullptr;
    ~DatasetHandle() { homm_dataset_free(ptr); }
};

std::string config_value(const homm_config* config, const std::string& key) {
    char buffer[4096];
    if (homm_config_get(config, key.c_str(), buffer, sizeof(buffer)) != HOMM_OK) {
        return "";
    }
    return buffer;
}

// Loads or generates the configured dataset pair.
int open_datasets(const homm_config* config, DatasetHandle& source, DatasetHandle& target) {
    if (config_value(config, "dataset") == "csv") {
        homm_status status =
            homm_dataset_load_csv(config_value(config, "source_csv").c_str(), &source.ptr);
        if (status != HOMM_OK) {
            return report_failure("loading source_csv", status);
        }
        status = homm_dataset_load_csv(config_value(config, "target_csv").c_str(), &target.ptr);
        if (status != HOMM_OK) {
            return report_failure("loading target_csv", status);
        }
        return kExitOk;
    }
    const homm_status status = homm_dataset_generate(config, &source.ptr, &target.ptr);
    if (status != HOMM_OK) {
        return report_failure("generating datasets", status);
    }
    return kExitOk;
}

int run_train(const std::string& config_path, const std::string& out_dir) {
    ConfigHandle config;
    homm_status status = homm_config_load(config_path.c_str(), &config.ptr);
    if (status != HOMM_OK) {
        return report_failure("loading config", status);
    }
    status = homm_config_validate(config.ptr);
    if (status != HOMM_OK) {
        return report_failure("validating config", status);
    }
    DatasetHandle source, target;
    if (const int code = open_datasets(config.ptr, source, target); code != kExitOk) {
        return code;
    }
    double source_accuracy = 0.0;
    double target_accuracy = 0.0;
    status = homm_train_run(config.ptr, source.ptr, target.ptr, out_dir.c_str(),
                            &source_accuracy, &target_accuracy);
    if (status != HOMM_OK) {
        return report_failure("training", status);
    }
    std::cout << "run complete: " << out_dir << "\n";
    std::cout << "final source accuracy: " << source_accuracy << "\n";
    if (!std::isnan(target_accuracy)) {
        std::cout << "final target accuracy: " << target_accuracy << "\n";
    }
    return kExitOk;
}

// Grid spec: "name=v1,v2,...;name=v1,..." over p, lambda_d, lambda_dc,
// eta, N, n_g.
struct SweepGrid {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> values;
};

bool parse_grid(const std::string& spec, SweepGrid& grid, std::string& error) {
    static const std::vector<std::string> allowed{"p", "lambda_d", "lambda_dc", "eta", "N", "n_g"};
    std::istringstream in(spec);
    std::string clause;
    while (std::getline(in, clause, ';')) {
        if (clause.empty()) {
            continue;
        }
        const auto eq = clause.find('=');
        if (eq == std::string::npos) {
            error = "grid clause '" + clause + "' is not name=v1,v2,...";
            return false;
        }
        const std::string name = clause.substr(0, eq);
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            error = "grid parameter '" + name + "' is not sweepable";
            return false;
        }
        std::vector<std::string> values;
        std::istringstream vin(clause.substr(eq + 1));
        std::string value;
        while (std::getline(vin, value, ',')) {
            if (!value.empty()) {
                values.push_back(value);
            }
        }
        if (values.empty()) {
            error = "grid parameter '" + name + "' has no values";
            return false;
        }
        grid.names.push_back(name);
        grid.values.push_back(std::move(values));
    }
    if (grid.names.empty()) {
        error = "empty sweep";
        return false;
    }
    return true;
}

int run_sweep(const std::string& config_path, const std::string& grid_spec,
              const std::string& out_dir) {
    SweepGrid grid;
    std::string grid_error;
    if (!parse_grid(grid_spec, grid, grid_error)) {
        std::cerr << "error: " << grid_error << "\n";
        return kExitValidation;
    }
    {
        ConfigHandle probe;
        const homm_status status = homm_config_load(config_path.c_str(), &probe.ptr);
        if (status != HOMM_OK) {
            return report_failure("loading config", status);
        }
    }
    std::filesystem::create_directories(out_dir);
    std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv", std::ios::binary);
    std::ofstream failures(std::filesystem::path(out_dir) / "failures.txt", std::ios::binary);
    for (const auto& name : grid.names) {
        summary << name << ",";
    }
    summary << "source_accuracy,target_accuracy\n";

    std::vector<std::size_t> cursor(grid.names.size(), 0);
    std::size_t run_index = 0;
    bool done = false;
    while (!done) {
        // one grid point
        ConfigHandle config;
        homm_status status = homm_config_load(config_path.c_str(), &config.ptr);
        if (status != HOMM_OK) {
            return report_failure("loading config", status);
        }
        std::ostringstream label;
        label << "run_" << std::setfill('0') << std::setw(3) << run_index;
        std::vector<std::string> point_values;
        bool set_ok = true;
        for (std::size_t i = 0; i < grid.names.size() && set_ok; ++i) {
            const std::string& value = grid.values[i][cursor[i]];
            point_values.push_back(value);
            label << "_" << grid.names[i] << "=" << value;
            status = homm_config_set(config.ptr, grid.names[i].c_str(), value.c_str());
            set_ok = status == HOMM_OK;
        }
        const std::string run_dir = (std::filesystem::path(out_dir) / label.str()).string();
        double source_accuracy = std::nan("");
        double target_accuracy = std::nan("");
        bool run_ok = set_ok;
        if (run_ok) {
            status = homm_config_validate(config.ptr);
            run_ok = status == HOMM_OK;
        }
        if (run_ok) {
            DatasetHandle source, target;
            if (open_datasets(config.ptr, source, target) == kExitOk) {
                status = homm_train_run(config.ptr, source.ptr, target.ptr, run_dir.c_str(),
                                        &source_accuracy, &target_accuracy);
                run_ok = status == HOMM_OK;
            } else {
                run_ok = false;
            }
        }
        if (run_ok) {
            for (const auto& value : point_values) {
                summary << value << ",";
            }
            summary << source_accuracy << "," << target_accuracy << "\n";
            std::cout << label.str() << ": target accuracy " << target_accuracy << "\n";
        } else {
            // record and continue with the rest of the grid
            failures << label.str() << ": " << homm_last_error() << "\n";
            std::cerr << label.str() << " failed: " << homm_last_error() << "\n";
        }

        ++run_index;
        done = true;
        for (std::size_t i = grid.names.size(); i-- > 0;) {
            if (++cursor[i] < grid.values[i].size()) {
                done = false;
                break;
            }
            cursor[i] = 0;
        }
    }
    std::cout << "sweep complete: " << run_index << " grid points, summary in " << out_dir
              << "/summary.csv\n";
    return kExitOk;
}

int run_check() {
    char* report_text = nullptr;
    const homm_status status = homm_self_check_json(&report_text);
    if (status != HOMM_OK) {
        return report_failure("self check", status);
    }
    const nlohmann::json report = nlohmann::json::parse(report_text);
    homm_string_free(report_text);
    for (const auto& property : report["properties"]) {
        std::cout << (property["passed"].get<bool>() ? "PASS " : "FAIL ")
                  << property["name"].get<std::string>()
                  << "  measured=" << property["measured"].get<double>()
                  << " threshold=" << property["threshold"].get<double>() << "  ("
                  << property["detail"].get<std::string>() << ")\n";
    }
    const bool ok = report["all_passed"].get<bool>();
    std::cout << (ok ? "all properties passed\n" : "some properties FAILED\n");
    return ok ? kExitOk : kExitValidation;
}

struct MeasureOptions {
    std::string source_path;
    std::string target_path;
    std::string losses;
    int p = 3;
    std::int64_t samples = 1000;
    double gamma = 1e-4;
    int n_g = 1;
    int exponent = 2;
    std::uint64_t seed = 0;
};

int run_measure(const MeasureOptions& options) {
    DatasetHandle source, target;
    homm_status status = homm_dataset_load_csv(options.source_path.c_str(), &source.ptr);
    if (status != HOMM_OK) {
        return report_failure("loading --source", status);
    }
    status = homm_dataset_load_csv(options.target_path.c_str(), &target.ptr);
    if (status != HOMM_OK) {
        return report_failure("loading --target", status);
    }
    const std::int64_t cols = homm_dataset_cols(source.ptr);
    if (cols != homm_dataset_cols(target.ptr)) {
        std::cerr << "error: feature width mismatch: source has " << cols << " columns, target has "
                  << homm_dataset_cols(target.ptr) << "\n";
        return kExitValidation;
    }
    const double* source_data = homm_dataset_features(source.ptr);
    const double* target_data = homm_dataset_features(target.ptr);
    const std::int64_t source_rows = homm_dataset_rows(source.ptr);
    const std::int64_t target_rows = homm_dataset_rows(target.ptr);

    std::istringstream in(options.losses);
    std::string name;
    while (std::getline(in, name, ',')) {
        if (name.empty()) {
            continue;
        }
        double value = 0.0;
        nlohmann::json line;
        line["loss"] = name;
        if (name == "full") {
            status = homm_loss_full(source_data, source_rows, target_data, target_rows, cols,
                                    options.p, &value);
            line["p"] = options.p;
        } else if (name == "group") {
            status = homm_loss_group(source_data, source_rows, target_data, target_rows, cols,
                                     options.p, options.n_g, &value);
            line["p"] = options.p;
            line["n_g"] = options.n_g;
        } else if (name == "sampled") {
            status = homm_loss_sampled(source_data, source_rows, target_data, target_rows, cols,
                                       options.p, options.samples, options.seed, &value);
            line["p"] = options.p;
            line["N"] = options.samples;
            line["seed"] = options.seed;
        } else if (name == "kernelized") {
            status = homm_loss_kernelized(source_data, source_rows, target_data, target_rows, cols,
                                          options.p, options.samples, options.seed, options.gamma,
                                          options.exponent, &value);
            line["p"] = options.p;
            line["N"] = options.samples;
            line["seed"] = options.seed;
            line["gamma"] = options.gamma;
            line["exponent"] = options.exponent;
        } else if (name == "mmd") {
            status = homm_loss_linear_mmd(source_data, source_rows, target_data, target_rows, cols,
                                          &value);
        } else if (name == "gram") {
            status = homm_loss_gram(source_data, source_rows, target_data, target_rows, cols, 0,
                                    &value);
        } else if (name == "coral") {
            status = homm_loss_gram(source_data, source_rows, target_data, target_rows, cols, 1,
                                    &value);
        } else {
            std::cerr << "error: unknown loss '" << name
                      << "' (expected full|group|sampled|kernelized|mmd|gram|coral)\n";
            return kExitValidation;
        }
        if (status != HOMM_OK) {
            return report_failure("measuring " + name, status);
        }
        line["value"] = value;
        std::cout << line.dump() << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"higher-order moment matching: domain-adaptation experiments and "
                 "discrepancy measurement"};
    app.require_subcommand(1);

    std::string config_path, out_dir, grid_spec;
    auto* train = app.add_subcommand("train", "run one experiment from a config file");
    train->add_option("--config", config_path, "config file (key = value lines)")->required();
    train->add_option("--out", out_dir, "output directory for manifest, metrics, checkpoint")
        ->required();

    auto* sweep = app.add_subcommand("sweep", "run a grid of experiments");
    sweep->add_option("--config", config_path, "base config file")->required();
    sweep->add_option("--grid", grid_spec, "grid spec, e.g. \"p=1,2,3;lambda_d=100,10000\"")
        ->required();
    sweep->add_option("--out", out_dir, "output directory (one subdirectory per grid point)")
        ->required();

    auto* check = app.add_subcommand("check", "verify the library's analytic properties");

    MeasureOptions measure_options;
    auto* measure =
        app.add_subcommand("measure", "measure discrepancies between two feature CSV files");
    measure->add_option("--source", measure_options.source_path, "source feature CSV")->required();
    measure->add_option("--target", measure_options.target_path, "target feature CSV")->required();
    measure
        ->add_option("--losses", measure_options.losses,
                     "comma list of full,group,sampled,kernelized,mmd,gram,coral")
        ->required();
    measure->add_option("--p", measure_options.p, "moment order (default 3)");
    measure->add_option("--N", measure_options.samples, "sampled coordinates (default 1000)");
    measure->add_option("--gamma", measure_options.gamma, "kernel gamma (default 1e-4)");
    measure->add_option("--n_g", measure_options.n_g, "group count (default 1)");
    measure->add_option("--exponent", measure_options.exponent, "kernel exponent 1|2 (default 2)");
    measure->add_option("--seed", measure_options.seed, "index sampling seed (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (train->parsed()) {
        return run_train(config_path, out_dir);
    }
    if (sweep->parsed()) {
        return run_sweep(config_path, grid_spec, out_dir);
    }
    if (check->parsed()) {
        return run_check();
    }
    if (measure->parsed()) {
        return run_measure(measure_options);
    }
    return kExitValidation;
}
