#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mllmsent/corpus.hpp"
#include "mllmsent/endpoint.hpp"
#include "mllmsent/labeling.hpp"
#include "mllmsent/lexicon.hpp"
#include "mllmsent/report.hpp"

namespace mllmsent::config {

struct DatasetConfig {
    corpus::DatasetId id = corpus::DatasetId::custom;
    std::filesystem::path path;
    std::filesystem::path images_root;  // base for relative image URIs
    corpus::IngestProfile profile;
};

struct TunerConfig {
    std::string url;
    std::string probe_base_model = "prajjwal1/bert-tiny";
    std::string finetune_base_model = "prajjwal1/bert-tiny";
    double timeout = 3600.0;  // seconds; training calls are synchronous
    nlohmann::json hyper = nlohmann::json::object();
};

struct LexiconConfig {
    std::filesystem::path dir;
    lexicon::ScoreOptions options;
};

/// Everything a pipeline run needs, loaded from one TOML document. Relative
/// paths resolve against the directory holding the config file.
struct PipelineConfig {
    std::filesystem::path source;
    std::uint64_t seed = 42;
    std::size_t folds = 5;
    evalkit::Metric metric = evalkit::Metric::f1_macro;
    std::filesystem::path out_dir = "runs";
    std::filesystem::path cache_path = "captions.jsonl";
    std::size_t fewshot_shots = 15;
    std::vector<DatasetConfig> datasets;
    std::vector<gateway::EndpointConfig> endpoints;
    std::vector<labeling::ProblemSetup> setups;
    TunerConfig tuner;
    LexiconConfig lexicon;
    nlohmann::json document;  // parsed source, kept for run snapshots

    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

    const DatasetConfig& dataset(corpus::DatasetId id) const;
    const gateway::EndpointConfig& endpoint(const std::string& name) const;
    bool has_endpoint(const std::string& name) const;
};

/// Resolved configuration as JSON (paths absolute, defaults filled in).
nlohmann::json resolved_json(const PipelineConfig& cfg);

}  // namespace mllmsent::config
