#include "run_io.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "errors.hpp"
#include "version.hpp"

namespace homm {

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

std::string dataset_description(const ExperimentConfig& config) {
    if (config.dataset == "csv") {
        return "csv source=" + config.source_csv + " target=" + config.target_csv;
    }
    return config.dataset + " classes=" + std::to_string(config.class_count) +
           " per_class=" + std::to_string(config.samples_per_class) +
           " dim=" + std::to_string(config.input_dim);
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const std::string& started_at, const std::string& finished_at) {
    nlohmann::json manifest;
    manifest["library_version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["dataset"] = dataset_description(config);
    manifest["config"] = config_to_map(config);
    manifest["started_at"] = started_at;
    if (!finished_at.empty()) {
        manifest["finished_at"] = finished_at;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << manifest.dump(2) << "\n";
}

} // namespace

std::pair<LabeledDataset, LabeledDataset> build_datasets(const ExperimentConfig& config) {
    if (config.dataset == "csv") {
        LabeledDataset source = load_features_csv(config.source_csv);
        LabeledDataset target = load_features_csv(config.target_csv);
        if (!source.has_labels()) {
            throw ContractError("source_csv must carry a label column");
        }
        source.domain = DomainTag::source;
        target.domain = DomainTag::target;
        return {std::move(source), std::move(target)};
    }
    ShiftSpec spec;
    spec.dim = config.input_dim;
    spec.class_count = config.class_count;
    spec.samples_per_class = config.samples_per_class;
    spec.rotation = config.rotation;
    spec.translation = config.translation;
    spec.scale = config.scale;
    spec.noise_std = config.noise_std;
    spec.seed = config.seed;
    if (config.dataset == "moons") {
        return gen_two_moons_pair(spec);
    }
    return gen_gaussian_mixture_pair(spec);
}

RunSummary run_experiment_to_dir(const ExperimentConfig& config, const LabeledDataset& source,
                                 const LabeledDataset& target, const std::string& output_dir) {
    validate_config(config);
    const std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + output_dir + "': " + ec.message());
    }

    const std::string started_at = utc_timestamp();
    write_manifest(dir / "manifest.json", config, started_at, "");

    const FeatureSet target_train = strip_labels(target);
    const LabeledDataset* target_eval = target.has_labels() ? &target : nullptr;
    const ExperimentResult result = run_experiment(config, source, target_train, target_eval);

    {
        std::ofstream out(dir / "metrics.jsonl", std::ios::binary);
        if (!out) {
            throw IoError("cannot write '" + (dir / "metrics.jsonl").string() + "'");
        }
        for (const StepMetrics& record : result.metrics.records) {
            nlohmann::json line;
            line["step"] = record.step;
            line["loss_source"] = record.loss_source;
            line["loss_d"] = record.loss_discrepancy;
            line["loss_dc"] = record.loss_clustering;
            line["loss_ent"] = record.loss_entropy;
            line["composite"] = record.composite;
            line["pseudo_count"] = record.pseudo_count;
            if (record.has_eval) {
                line["source_accuracy"] = record.source_accuracy;
                if (record.has_target_accuracy) {
                    line["target_accuracy"] = record.target_accuracy;
                }
            }
            out << line.dump() << "\n";
        }
        nlohmann::json final_line;
        final_line["final"] = true;
        final_line["source_accuracy"] = result.metrics.final_source_accuracy;
        if (result.metrics.has_final_target_accuracy) {
            final_line["target_accuracy"] = result.metrics.final_target_accuracy;
        }
        out << final_line.dump() << "\n";
    }

    save_network(result.state.net, (dir / "checkpoint.txt").string());
    write_manifest(dir / "manifest.json", config, started_at, utc_timestamp());

    RunSummary summary;
    summary.final_source_accuracy = result.metrics.final_source_accuracy;
    summary.final_target_accuracy = result.metrics.final_target_accuracy;
    summary.has_final_target_accuracy = result.metrics.has_final_target_accuracy;
    return summary;
}

} // namespace homm
