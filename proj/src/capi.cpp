// extern "C" surface of the shared library: opaque handles over the core
// types, exceptions mapped to status codes with a thread-local message.

#include "homm/homm.h"

#include <cstring>
#include <limits>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "data.hpp"
#include "discrepancy.hpp"
#include "errors.hpp"
#include "run_io.hpp"
#include "selfcheck.hpp"
#include "version.hpp"

struct homm_config {
    homm::ExperimentConfig value;
};

struct homm_dataset {
    homm::LabeledDataset value;
    // Row-major copy handed out by homm_dataset_features.
    mutable std::vector<double> row_major;
};

namespace {

thread_local std::string g_last_error;

homm_status fail(homm_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename F>
homm_status guard(F&& body) noexcept {
    try {
        body();
        g_last_error.clear();
        return HOMM_OK;
    } catch (const homm::CapacityError& e) {
        return fail(HOMM_ERROR_CAPACITY, e.what());
    } catch (const homm::ParseError& e) {
        return fail(HOMM_ERROR_PARSE, e.what());
    } catch (const homm::IoError& e) {
        return fail(HOMM_ERROR_IO, e.what());
    } catch (const homm::NumericError& e) {
        return fail(HOMM_ERROR_NUMERIC, e.what());
    } catch (const homm::ContractError& e) {
        return fail(HOMM_ERROR_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(HOMM_ERROR_INTERNAL, e.what());
    } catch (...) {
        return fail(HOMM_ERROR_INTERNAL, "unknown error");
    }
}

homm::Matrix to_matrix(const double* data, int64_t rows, int64_t cols) {
    if (data == nullptr) {
        throw homm::ContractError("feature pointer is null");
    }
    if (rows < 1 || cols < 1) {
        throw homm::ContractError("feature matrix must have positive dimensions");
    }
    homm::Matrix m(rows, cols);
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < cols; ++j) {
            m(i, j) = data[i * cols + j];
        }
    }
    return m;
}

void require_out(const void* out, const char* name) {
    if (out == nullptr) {
        throw homm::ContractError(std::string(name) + " output pointer is null");
    }
}

} // namespace

extern "C" {

const char* homm_version(void) { return homm::kVersion; }

const char* homm_last_error(void) { return g_last_error.c_str(); }

homm_status homm_loss_full(const double* source, int64_t source_rows, const double* target,
                           int64_t target_rows, int64_t cols, int32_t order, double* value) {
    return guard([&] {
        require_out(value, "value");
        *value = homm::homm_full(to_matrix(source, source_rows, cols),
                                 to_matrix(target, target_rows, cols), order);
    });
}

homm_status homm_loss_group(const double* source, int64_t source_rows, const double* target,
                            int64_t target_rows, int64_t cols, int32_t order, int32_t groups,
                            double* value) {
    return guard([&] {
        require_out(value, "value");
        *value = homm::homm_group(to_matrix(source, source_rows, cols),
                                  to_matrix(target, target_rows, cols), order, groups);
    });
}

homm_status homm_loss_sampled(const double* source, int64_t source_rows, const double* target,
                              int64_t target_rows, int64_t cols, int32_t order, int64_t samples,
                              uint64_t seed, double* value) {
    return guard([&] {
        require_out(value, "value");
        const homm::IndexMatrix idx = homm::sample_indices(cols, order, samples, seed);
        *value = homm::homm_sampled(to_matrix(source, source_rows, cols),
                                    to_matrix(target, target_rows, cols), idx);
    });
}

homm_status homm_loss_kernelized(const double* source, int64_t source_rows, const double* target,
                                 int64_t target_rows, int64_t cols, int32_t order, int64_t samples,
                                 uint64_t seed, double gamma, int32_t exponent, double* value) {
    return guard([&] {
        require_out(value, "value");
        const homm::IndexMatrix idx = homm::sample_indices(cols, order, samples, seed);
        *value = homm::khomm(to_matrix(source, source_rows, cols),
                             to_matrix(target, target_rows, cols), idx,
                             homm::KernelConfig{gamma, exponent});
    });
}

homm_status homm_loss_linear_mmd(const double* source, int64_t source_rows, const double* target,
                                 int64_t target_rows, int64_t cols, double* value) {
    return guard([&] {
        require_out(value, "value");
        *value = homm::linear_mmd(to_matrix(source, source_rows, cols),
                                  to_matrix(target, target_rows, cols));
    });
}

homm_status homm_loss_gram(const double* source, int64_t source_rows, const double* target,
                           int64_t target_rows, int64_t cols, int32_t centralize, double* value) {
    return guard([&] {
        require_out(value, "value");
        *value = homm::gram_loss(to_matrix(source, source_rows, cols),
                                 to_matrix(target, target_rows, cols), centralize != 0);
    });
}

homm_status homm_config_create(homm_config** out) {
    return guard([&] {
        require_out(out, "config");
        *out = new homm_config{};
    });
}

homm_status homm_config_load(const char* path, homm_config** out) {
    return guard([&] {
        require_out(out, "config");
        if (path == nullptr) {
            throw homm::ContractError("path is null");
        }
        *out = new homm_config{homm::load_config_file(path)};
    });
}

homm_status homm_config_set(homm_config* config, const char* key, const char* value) {
    return guard([&] {
        if (config == nullptr || key == nullptr || value == nullptr) {
            throw homm::ContractError("null argument to homm_config_set");
        }
        // Reuse the file parser so overrides follow the same syntax and
        // diagnostics as the config file.
        const std::string text = homm::serialize_config(config->value) + std::string(key) +
                                 " = " + std::string(value) + "\n";
        config->value = homm::parse_config_text(text);
    });
}

homm_status homm_config_get(const homm_config* config, const char* key, char* buffer,
                            int64_t buffer_size) {
    return guard([&] {
        if (config == nullptr || key == nullptr || buffer == nullptr) {
            throw homm::ContractError("null argument to homm_config_get");
        }
        const auto map = homm::config_to_map(config->value);
        const auto found = map.find(key);
        if (found == map.end()) {
            throw homm::ContractError("unknown key '" + std::string(key) + "'");
        }
        if (static_cast<int64_t>(found->second.size()) + 1 > buffer_size) {
            throw homm::ContractError("buffer too small for key '" + std::string(key) + "'");
        }
        std::memcpy(buffer, found->second.c_str(), found->second.size() + 1);
    });
}

homm_status homm_config_validate(const homm_config* config) {
    return guard([&] {
        if (config == nullptr) {
            throw homm::ContractError("config is null");
        }
        homm::validate_config(config->value);
    });
}

void homm_config_free(homm_config* config) { delete config; }

homm_status homm_dataset_load_csv(const char* path, homm_dataset** out) {
    return guard([&] {
        require_out(out, "dataset");
        if (path == nullptr) {
            throw homm::ContractError("path is null");
        }
        *out = new homm_dataset{homm::load_features_csv(path), {}};
    });
}

homm_status homm_dataset_save_csv(const homm_dataset* dataset, const char* path) {
    return guard([&] {
        if (dataset == nullptr || path == nullptr) {
            throw homm::ContractError("null argument to homm_dataset_save_csv");
        }
        homm::save_features_csv(dataset->value, path);
    });
}

homm_status homm_dataset_generate(const homm_config* config, homm_dataset** source,
                                  homm_dataset** target) {
    return guard([&] {
        if (config == nullptr) {
            throw homm::ContractError("config is null");
        }
        require_out(source, "source");
        require_out(target, "target");
        auto pair = homm::build_datasets(config->value);
        *source = new homm_dataset{std::move(pair.first), {}};
        *target = new homm_dataset{std::move(pair.second), {}};
    });
}

int64_t homm_dataset_rows(const homm_dataset* dataset) {
    return dataset == nullptr ? 0 : dataset->value.size();
}

int64_t homm_dataset_cols(const homm_dataset* dataset) {
    return dataset == nullptr ? 0 : dataset->value.dim();
}

int32_t homm_dataset_has_labels(const homm_dataset* dataset) {
    return dataset != nullptr && dataset->value.has_labels() ? 1 : 0;
}

const double* homm_dataset_features(const homm_dataset* dataset) {
    if (dataset == nullptr) {
        return nullptr;
    }
    if (dataset->row_major.empty()) {
        const homm::Matrix& m = dataset->value.features;
        dataset->row_major.resize(static_cast<std::size_t>(m.rows()) *
                                  static_cast<std::size_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                dataset->row_major[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
            }
        }
    }
    return dataset->row_major.data();
}

homm_status homm_dataset_labels(const homm_dataset* dataset, int32_t* out, int64_t capacity) {
    return guard([&] {
        if (dataset == nullptr) {
            throw homm::ContractError("dataset is null");
        }
        require_out(out, "labels");
        if (!dataset->value.has_labels()) {
            throw homm::ContractError("dataset has no labels");
        }
        if (capacity < dataset->value.size()) {
            throw homm::ContractError("label buffer too small");
        }
        for (Eigen::Index i = 0; i < dataset->value.size(); ++i) {
            out[i] = dataset->value.labels[static_cast<std::size_t>(i)];
        }
    });
}

void homm_dataset_free(homm_dataset* dataset) { delete dataset; }

homm_status homm_train_run(const homm_config* config, const homm_dataset* source,
                           const homm_dataset* target, const char* output_dir,
                           double* final_source_accuracy, double* final_target_accuracy) {
    return guard([&] {
        if (config == nullptr || source == nullptr || target == nullptr || output_dir == nullptr) {
            throw homm::ContractError("null argument to homm_train_run");
        }
        const homm::RunSummary summary = homm::run_experiment_to_dir(
            config->value, source->value, target->value, output_dir);
        if (final_source_accuracy != nullptr) {
            *final_source_accuracy = summary.final_source_accuracy;
        }
        if (final_target_accuracy != nullptr) {
            *final_target_accuracy = summary.has_final_target_accuracy
                                         ? summary.final_target_accuracy
                                         : std::numeric_limits<double>::quiet_NaN();
        }
    });
}

homm_status homm_self_check_json(char** report_json) {
    return guard([&] {
        require_out(report_json, "report");
        const std::vector<homm::PropertyResult> results = homm::run_self_check();
        nlohmann::json report;
        report["all_passed"] = homm::all_passed(results);
        nlohmann::json properties = nlohmann::json::array();
        for (const homm::PropertyResult& r : results) {
            properties.push_back({{"name", r.name},
                                  {"passed", r.passed},
                                  {"measured", r.measured},
                                  {"threshold", r.threshold},
                                  {"detail", r.detail}});
        }
        report["properties"] = properties;
        const std::string text = report.dump();
        char* copy = new char[text.size() + 1];
        std::memcpy(copy, text.c_str(), text.size() + 1);
        *report_json = copy;
    });
}

void homm_string_free(char* text) { delete[] text; }

} // extern "C"
