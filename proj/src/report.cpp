#include "mllmsent/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mllmsent/error.hpp"
#include "mllmsent/statistics.hpp"

namespace mllmsent::evalkit {

namespace {

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
    const auto& rows = j.at("counts");
    ConfusionMatrix cm(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t p = 0; p < rows[t].size(); ++p) cm.add(t, p, rows[t][p].get<std::size_t>());
    }
    const auto& inv = j.at("invalid_by_true_class");
    for (std::size_t t = 0; t < inv.size(); ++t) cm.add_invalid(t, inv[t].get<std::size_t>());
    return cm;
}

}  // namespace

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::f1_macro: return "f1_macro";
        case Metric::f1_weighted: return "f1_weighted";
        case Metric::accuracy: return "accuracy";
    }
    return "f1_macro";
}

Metric metric_from_string(std::string_view s) {
    if (s == "f1_macro" || s == "macro") return Metric::f1_macro;
    if (s == "f1_weighted" || s == "weighted") return Metric::f1_weighted;
    if (s == "accuracy") return Metric::accuracy;
    throw ConfigError("unknown metric '" + std::string(s) + "'");
}

double evaluate(Metric m, const ConfusionMatrix& cm) {
    switch (m) {
        case Metric::f1_macro: return f_score(cm, Averaging::macro);
        case Metric::f1_weighted: return f_score(cm, Averaging::weighted);
        case Metric::accuracy: return accuracy(cm);
    }
    return 0.0;
}

EvalReport make_report(const labeling::ProblemSetup& setup, std::string system_id,
                       std::string task, Metric metric, const std::vector<ConfusionMatrix>& folds) {
    if (folds.empty()) throw TooFewScores("a report needs at least one fold");
    EvalReport r;
    r.setup = setup;
    r.system_id = std::move(system_id);
    r.task = std::move(task);
    r.metric = metric;
    r.confusion = ConfusionMatrix(static_cast<std::size_t>(setup.classes));

    bool excluded_defined = true;
    std::vector<double> excluded_scores;
    for (const auto& cm : folds) {
        r.confusion.merge(cm);
        r.per_fold_scores.push_back(evaluate(metric, cm));
        auto valid = cm.without_invalid();
        if (valid.evaluated() == 0) {
            excluded_defined = false;
        } else {
            excluded_scores.push_back(evaluate(metric, valid));
        }
    }
    r.invalid_rate = static_cast<double>(r.confusion.invalid_count()) /
                     static_cast<double>(std::max<std::size_t>(1, r.confusion.evaluated()));
    r.invalid_flag = r.invalid_rate > kMaxInvalidRate;

    if (!r.invalid_flag) {
        if (r.per_fold_scores.size() >= 2) {
            auto ci = ci95(r.per_fold_scores);
            r.mean = ci.mean;
            r.ci95_halfwidth = ci.halfwidth;
        } else {
            r.mean = r.per_fold_scores.front();
        }
    }
    if (r.confusion.invalid_count() > 0 && excluded_defined) {
        ExcludedAccounting ex;
        ex.per_fold_scores = excluded_scores;
        if (excluded_scores.size() >= 2) {
            auto ci = ci95(excluded_scores);
            ex.mean = ci.mean;
            ex.ci95_halfwidth = ci.halfwidth;
        } else {
            ex.mean = excluded_scores.front();
        }
        r.excluded = std::move(ex);
    }
    return r;
}

void compare(std::vector<EvalReport>& reports) {
    for (auto& r : reports) {
        r.pairwise.clear();
        r.relative_gains.clear();
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        auto& a = reports[i];
        for (std::size_t j = 0; j < reports.size(); ++j) {
            if (i == j) continue;
            const auto& b = reports[j];
            if (!(a.setup == b.setup) || a.metric != b.metric || a.system_id == b.system_id) continue;
            if (!a.mean || !b.mean) continue;

            if (a.per_fold_scores.size() == b.per_fold_scores.size() &&
                a.per_fold_scores.size() >= 2) {
                PairwiseTest test{b.system_id, std::nullopt, std::nullopt, {}};
                try {
                    auto pt = paired_t(a.per_fold_scores, b.per_fold_scores);
                    test.t_stat = pt.t;
                    test.p_value = pt.p;
                } catch (const ZeroVarianceDifferences& e) {
                    test.note = e.kind();
                }
                a.pairwise.push_back(std::move(test));
            }
            if (*b.mean > 0.0) a.relative_gains.push_back({b.system_id, relative_gain(*a.mean, *b.mean)});
        }
    }
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json pairwise = nlohmann::json::array();
    for (const auto& p : r.pairwise) {
        nlohmann::json j{{"other_system", p.other_system},
                         {"t_stat", optional_number(p.t_stat)},
                         {"p_value", optional_number(p.p_value)}};
        if (!p.note.empty()) j["note"] = p.note;
        pairwise.push_back(std::move(j));
    }
    nlohmann::json gains = nlohmann::json::array();
    for (const auto& g : r.relative_gains) {
        gains.push_back({{"other_system", g.other_system}, {"gain", g.gain}});
    }
    nlohmann::json excluded = nullptr;
    if (r.excluded) {
        excluded = {{"per_fold_scores", r.excluded->per_fold_scores},
                    {"mean", r.excluded->mean},
                    {"ci95_halfwidth", r.excluded->ci95_halfwidth}};
    }
    return {{"setup", labeling::to_json(r.setup)},
            {"system_id", r.system_id},
            {"task", r.task},
            {"metric", to_string(r.metric)},
            {"per_fold_scores", r.per_fold_scores},
            {"mean", optional_number(r.mean)},
            {"ci95_halfwidth", optional_number(r.ci95_halfwidth)},
            {"ci_method", "student_t"},
            {"confusion", to_json(r.confusion)},
            {"invalid_rate", r.invalid_rate},
            {"invalid_flag", r.invalid_flag},
            {"invalid_excluded", excluded},
            {"pairwise", pairwise},
            {"relative_gains", gains}};
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.setup = labeling::setup_from_json(j.at("setup"));
    r.system_id = j.at("system_id").get<std::string>();
    r.task = j.value("task", std::string{});
    r.metric = metric_from_string(j.at("metric").get<std::string>());
    r.per_fold_scores = j.at("per_fold_scores").get<std::vector<double>>();
    if (!j.at("mean").is_null()) r.mean = j["mean"].get<double>();
    if (!j.at("ci95_halfwidth").is_null()) r.ci95_halfwidth = j["ci95_halfwidth"].get<double>();
    r.confusion = confusion_from_json(j.at("confusion"));
    r.invalid_rate = j.value("invalid_rate", 0.0);
    r.invalid_flag = j.value("invalid_flag", false);
    if (j.contains("invalid_excluded") && !j["invalid_excluded"].is_null()) {
        const auto& e = j["invalid_excluded"];
        r.excluded = ExcludedAccounting{e.at("per_fold_scores").get<std::vector<double>>(),
                                        e.at("mean").get<double>(),
                                        e.at("ci95_halfwidth").get<double>()};
    }
    for (const auto& p : j.value("pairwise", nlohmann::json::array())) {
        PairwiseTest t{p.at("other_system").get<std::string>(), std::nullopt, std::nullopt,
                       p.value("note", std::string{})};
        if (!p.at("t_stat").is_null()) t.t_stat = p["t_stat"].get<double>();
        if (!p.at("p_value").is_null()) t.p_value = p["p_value"].get<double>();
        r.pairwise.push_back(std::move(t));
    }
    for (const auto& g : j.value("relative_gains", nlohmann::json::array())) {
        r.relative_gains.push_back({g.at("other_system").get<std::string>(), g.at("gain").get<double>()});
    }
    return r;
}

nlohmann::json reports_document(const std::vector<EvalReport>& reports) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : reports) list.push_back(to_json(r));
    return {{"schema", kReportSchema}, {"reports", list}};
}

std::vector<EvalReport> load_reports(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("report not found: " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SchemaMismatch(path.string() + ": invalid JSON");
    if (doc.value("schema", "") != kReportSchema) {
        throw SchemaMismatch(path.string() + ": expected schema " + std::string(kReportSchema));
    }
    std::vector<EvalReport> out;
    for (const auto& r : doc.at("reports")) out.push_back(report_from_json(r));
    return out;
}

namespace {

std::string cell_text(const EvalReport& r) {
    if (!r.mean) return "—";
    std::string v = percent(*r.mean);
    if (r.ci95_halfwidth) v += " ± " + percent(*r.ci95_halfwidth);
    return v;
}

std::size_t display_width(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

std::string format_grid(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out << (c ? " | " : "") << rows[r][c]
                << std::string(width[c] - display_width(rows[r][c]), ' ');
        }
        out << '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < width.size(); ++c) out << (c ? "-+-" : "") << std::string(width[c], '-');
            out << '\n';
        }
    }
    return out.str();
}

std::string table_notes(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) {
        if (r.invalid_flag) {
            out << "note: " << r.system_id << " " << r.setup.name() << " withheld, invalid rate "
                << percent(r.invalid_rate) << "%\n";
        }
    }
    return out.str();
}

std::string table_caption(const std::vector<EvalReport>& reports) {
    if (reports.empty()) return "";
    return "metric: " + std::string(to_string(reports.front().metric)) + " (percent, mean ± 95% CI)\n";
}

}  // namespace

std::string render_table(const std::vector<EvalReport>& reports) {
    std::vector<std::string> setups;
    std::vector<std::string> systems;
    std::map<std::pair<std::string, std::string>, const EvalReport*> cell;
    for (const auto& r : reports) {
        auto s = r.setup.name();
        if (std::find(setups.begin(), setups.end(), s) == setups.end()) setups.push_back(s);
        if (std::find(systems.begin(), systems.end(), r.system_id) == systems.end()) {
            systems.push_back(r.system_id);
        }
        cell[{r.system_id, s}] = &r;
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"system"};
    for (const auto& s : setups) header.push_back(s);
    rows.push_back(header);
    for (const auto& sys : systems) {
        std::vector<std::string> row{sys};
        for (const auto& s : setups) {
            auto it = cell.find({sys, s});
            row.push_back(it == cell.end() ? "" : cell_text(*it->second));
        }
        rows.push_back(std::move(row));
    }
    return table_caption(reports) + format_grid(rows) + table_notes(reports);
}

std::string render_problem_table(const std::vector<EvalReport>& reports) {
    std::vector<std::string> setups;
    for (const auto& r : reports) {
        auto s = r.setup.name();
        if (std::find(setups.begin(), setups.end(), s) == setups.end()) setups.push_back(s);
    }
    std::string metric = reports.empty() ? "score" : std::string(to_string(reports.front().metric));
    std::vector<std::vector<std::string>> rows{{"problem", "method", metric}};
    for (const auto& s : setups) {
        for (const auto& r : reports) {
            if (r.setup.name() == s) rows.push_back({s, r.system_id, cell_text(r)});
        }
    }
    return table_caption(reports) + format_grid(rows) + table_notes(reports);
}

std::string render_chart_csv(const std::vector<EvalReport>& reports) {
    std::vector<std::string> setups;
    for (const auto& r : reports) {
        auto s = r.setup.name();
        if (std::find(setups.begin(), setups.end(), s) == setups.end()) setups.push_back(s);
    }
    std::ostringstream out;
    out << "setup,system,mean,ci_low,ci_high\n";
    for (const auto& s : setups) {
        for (const auto& r : reports) {
            if (r.setup.name() != s) continue;
            out << s << ',' << r.system_id << ',';
            if (r.mean) {
                double h = r.ci95_halfwidth.value_or(0.0);
                out << fixed6(*r.mean) << ',' << fixed6(*r.mean - h) << ',' << fixed6(*r.mean + h);
            } else {
                out << ",,";
            }
            out << '\n';
        }
    }
    return out.str();
}

EmittedFiles emit_report(const std::vector<EvalReport>& reports,
                         const std::filesystem::path& out_dir, const std::string& stem,
                         bool chart, TableLayout layout) {
    if (reports.empty()) throw std::invalid_argument("emit_report: no reports");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    EmittedFiles files;
    files.json = out_dir / (stem + ".json");
    files.table = out_dir / (stem + ".txt");
    write_file(files.json, reports_document(reports).dump(2) + "\n");
    write_file(files.table, layout == TableLayout::by_problem ? render_problem_table(reports)
                                                            : render_table(reports));
    if (chart) {
        files.chart = out_dir / (stem + "_chart.csv");
        write_file(files.chart, render_chart_csv(reports));
    }
    return files;
}

}  // namespace mllmsent::evalkit
