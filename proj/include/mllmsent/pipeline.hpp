#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mllmsent/config.hpp"
#include "mllmsent/corpus.hpp"
#include "mllmsent/labeling.hpp"
#include "mllmsent/report.hpp"
#include "mllmsent/tuner_client.hpp"

namespace mllmsent::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Task { task1, task2a_lexicon, task2a_fewshot, task2a_probe, task2b };
std::string_view to_string(Task t);
Task task_from_string(std::string_view s);

/// Tool and library versions recorded in every run directory.
nlohmann::json versions();

// ingest

struct IngestSummary {
    corpus::DatasetId dataset = corpus::DatasetId::custom;
    nlohmann::json stats;
    std::size_t rejected = 0;
    std::filesystem::path stats_path;
    std::optional<std::filesystem::path> errors_path;
};

IngestSummary cmd_ingest(const config::PipelineConfig& cfg, corpus::DatasetId dataset,
                         bool skip_invalid);

// derive

/// Ingests the setup's dataset and applies the merge/dominance rule.
labeling::LabeledSubset load_subset(const config::PipelineConfig& cfg,
                                    const labeling::ProblemSetup& setup);

struct DeriveSummary {
    labeling::ProblemSetup setup;
    std::size_t size = 0;
    std::filesystem::path path;
    std::string line;  // "percept5 sigma3_p5 3566"
};

DeriveSummary cmd_derive(const config::PipelineConfig& cfg, const labeling::ProblemSetup& setup);

// caption

struct CaptionFailure {
    std::string image_id;
    std::string kind;
    std::string message;
};

struct CaptionSummary {
    std::string model;
    std::size_t requested = 0;
    std::size_t cache_hits = 0;
    std::size_t captioned = 0;
    std::size_t retries = 0;
    std::vector<CaptionFailure> failures;

    /// 0 all captioned, 2 some failed, 1 none succeeded.
    int exit_code() const;
};

nlohmann::json to_json(const CaptionSummary& s);

struct CaptionOptions {
    std::string model;
    corpus::DatasetId dataset = corpus::DatasetId::percept5;
    std::optional<labeling::ProblemSetup> setup;  // whole dataset when empty
    std::optional<std::size_t> limit;
};

CaptionSummary cmd_caption(const config::PipelineConfig& cfg, const CaptionOptions& opts);

// run

struct RunOptions {
    Task task = Task::task1;
    labeling::ProblemSetup setup;
    std::string model;      // endpoint alias (task1, fewshot) or base model override (tuner)
    std::string captioner;  // endpoint alias whose captions feed task2*
    std::optional<std::size_t> shots;
};

struct RunResult {
    evalkit::EvalReport report;
    std::filesystem::path run_dir;
};

RunResult cmd_run(const config::PipelineConfig& cfg, const RunOptions& opts);

// cross-dataset

struct ManifestEntry {
    corpus::DatasetId dataset = corpus::DatasetId::custom;
    std::string image_id;
};

/// Throws LeakageDetected when any evaluation instance appears in training.
void check_leakage(const std::vector<ManifestEntry>& train, const std::vector<ManifestEntry>& eval);

struct CrossOptions {
    std::string captioner;
    tuner::Mode mode = tuner::Mode::finetune;
    std::string base_model;  // overrides the configured base model
    std::vector<int> thresholds{3, 5};
};

struct CrossResult {
    std::vector<evalkit::EvalReport> reports;
    std::filesystem::path run_dir;
};

CrossResult cmd_crossdataset(const config::PipelineConfig& cfg, const CrossOptions& opts);

// report

/// Collects reports from files or directories (searched for report.json),
/// fills pairwise comparisons and writes `<stem>.json/.txt/_chart.csv`.
std::vector<evalkit::EvalReport> cmd_report(const std::vector<std::filesystem::path>& inputs,
                                            const std::filesystem::path& out_dir,
                                            const std::string& stem = "summary",
                                            evalkit::TableLayout layout = evalkit::TableLayout::by_system);

}  // namespace mllmsent::pipeline
