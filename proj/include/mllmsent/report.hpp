#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mllmsent/labeling.hpp"
#include "mllmsent/metrics.hpp"

namespace mllmsent::evalkit {

inline constexpr std::string_view kReportSchema = "mllmsent.eval_report/1";

enum class Metric { f1_macro, f1_weighted, accuracy };
std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);
double evaluate(Metric m, const ConfusionMatrix& cm);

/// Above this share of invalid predictions the score is withheld.
inline constexpr double kMaxInvalidRate = 0.5;

struct PairwiseTest {
    std::string other_system;
    std::optional<double> t_stat;  // empty when the test is undefined
    std::optional<double> p_value;
    std::string note;
};

struct RelativeGain {
    std::string other_system;
    double gain = 0.0;
};

/// Scores recomputed with invalid predictions removed instead of counted wrong.
struct ExcludedAccounting {
    std::vector<double> per_fold_scores;
    double mean = 0.0;
    double ci95_halfwidth = 0.0;
};

struct EvalReport {
    labeling::ProblemSetup setup;
    std::string system_id;
    std::string task;
    Metric metric = Metric::f1_macro;
    std::vector<double> per_fold_scores;
    std::optional<double> mean;  // withheld when invalid_rate > kMaxInvalidRate
    std::optional<double> ci95_halfwidth;
    ConfusionMatrix confusion;
    double invalid_rate = 0.0;
    bool invalid_flag = false;
    std::optional<ExcludedAccounting> excluded;
    std::vector<PairwiseTest> pairwise;
    std::vector<RelativeGain> relative_gains;
};

/// Builds a report from one confusion matrix per fold.
EvalReport make_report(const labeling::ProblemSetup& setup, std::string system_id,
                       std::string task, Metric metric, const std::vector<ConfusionMatrix>& folds);

/// Fills pairwise t-tests and relative gains between reports that share a
/// setup, metric and fold count.
void compare(std::vector<EvalReport>& reports);

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

nlohmann::json reports_document(const std::vector<EvalReport>& reports);
std::vector<EvalReport> load_reports(const std::filesystem::path& path);

/// Systems as rows, setups as columns, "mean ± halfwidth" in percent.
std::string render_table(const std::vector<EvalReport>& reports);

/// One row per (setup, system): problem | method | "mean ± halfwidth".
std::string render_problem_table(const std::vector<EvalReport>& reports);

enum class TableLayout { by_system, by_problem };

/// setup,system,mean,ci_low,ci_high rows grouped by setup, for bar charts
/// with CI whiskers.
std::string render_chart_csv(const std::vector<EvalReport>& reports);

struct EmittedFiles {
    std::filesystem::path json;
    std::filesystem::path table;
    std::filesystem::path chart;
};

/// Writes `<stem>.json`, `<stem>.txt` and optionally `<stem>_chart.csv`.
EmittedFiles emit_report(const std::vector<EvalReport>& reports,
                         const std::filesystem::path& out_dir, const std::string& stem,
                         bool chart = true, TableLayout layout = TableLayout::by_system);

}  // namespace mllmsent::evalkit
