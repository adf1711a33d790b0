#include "mllmsent/cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "mllmsent/config.hpp"
#include "mllmsent/error.hpp"
#include "mllmsent/pipeline.hpp"

namespace mllmsent::cli {

namespace {

struct SetupArgs {
    std::string dataset = "percept5";
    std::string setup;  // "sigma3_p5"
    int threshold = 0;
    int classes = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--dataset", dataset, "percept5, deep2 or custom");
        cmd->add_option("--setup", setup, "setup name, e.g. sigma3_p5");
        cmd->add_option("--threshold", threshold, "agreement threshold l");
        cmd->add_option("--classes", classes, "number of classes C");
    }

    bool given() const { return !setup.empty() || threshold > 0 || classes > 0; }

    labeling::ProblemSetup resolve() const {
        int l = threshold;
        int c = classes;
        if (!setup.empty()) {
            static const std::regex re(R"(sigma(\d+)_p(\d+))");
            std::smatch m;
            if (!std::regex_match(setup, m, re)) throw ConfigError("bad setup name '" + setup + "'");
            l = std::stoi(m[1]);
            c = std::stoi(m[2]);
        }
        if (l <= 0 || c <= 0) throw ConfigError("a setup needs --setup or both --threshold and --classes");
        return labeling::ProblemSetup::make(corpus::dataset_id_from_string(dataset), l, c);
    }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Image sentiment benchmarking pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    app.add_option("--config", config_path, "pipeline config (TOML)");
    app.add_option("--seed", seed, "override run.seed");
    app.add_option("--out", out_dir, "override run.out");

    auto* ingest = app.add_subcommand("ingest", "validate an annotation file and write dataset stats");
    std::string ingest_dataset = "percept5";
    bool skip_invalid = false;
    ingest->add_option("--dataset", ingest_dataset, "dataset id from the config");
    ingest->add_flag("--skip-invalid", skip_invalid, "collect malformed rows instead of aborting");

    auto* derive = app.add_subcommand("derive", "write labeled subsets and print their sizes");
    SetupArgs derive_setup;
    derive_setup.add_to(derive);

    auto* caption = app.add_subcommand("caption", "caption images with one endpoint (cache-aware)");
    std::string caption_model;
    SetupArgs caption_setup;
    std::optional<std::size_t> caption_limit;
    caption->add_option("--model", caption_model, "endpoint alias")->required();
    caption_setup.add_to(caption);
    caption->add_option("--limit", caption_limit, "caption at most N images");

    auto* run_cmd = app.add_subcommand("run", "run one task with cross-validation");
    std::string task;
    SetupArgs run_setup;
    pipeline::RunOptions run_opts;
    std::optional<std::size_t> shots;
    run_cmd->add_option("--task", task, "task1, task2a_lexicon, task2a_fewshot, task2a_probe, task2b")
        ->required();
    run_setup.add_to(run_cmd);
    run_cmd->add_option("--model", run_opts.model, "endpoint alias, or base model for tuner tasks");
    run_cmd->add_option("--captioner", run_opts.captioner, "endpoint alias whose captions are used");
    run_cmd->add_option("--shots", shots, "few-shot examples per prompt (5-15)");

    auto* cross = app.add_subcommand("cross-dataset", "train on PerceptSent, evaluate on DeepSent");
    pipeline::CrossOptions cross_opts;
    std::string cross_mode = "finetune";
    cross->add_option("--captioner", cross_opts.captioner, "endpoint alias whose captions are used")->required();
    cross->add_option("--mode", cross_mode, "probe or finetune");
    cross->add_option("--base-model", cross_opts.base_model, "override the configured base model");

    auto* report = app.add_subcommand("report", "aggregate reports into a table and chart data");
    std::vector<std::string> inputs;
    std::string stem = "summary";
    std::string layout = "system";
    report->add_option("inputs", inputs, "report files or run directories")->required();
    report->add_option("--stem", stem, "output file stem");
    report->add_option("--layout", layout, "system (systems x setups) or problem (one row per setup and method)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (report->parsed()) {
            std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir);
            std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
            if (layout != "system" && layout != "problem") throw ConfigError("unknown layout '" + layout + "'");
            auto reports = pipeline::cmd_report(paths, dir, stem,
                                                layout == "problem" ? evalkit::TableLayout::by_problem
                                                                    : evalkit::TableLayout::by_system);
            out << "aggregated " << reports.size() << " reports into " << (dir / (stem + ".json")).string() << '\n';
            return 0;
        }

        if (config_path.empty()) throw ConfigError("--config is required");
        auto cfg = config::PipelineConfig::load(config_path);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out_dir = std::filesystem::absolute(out_dir);

        if (ingest->parsed()) {
            auto s = pipeline::cmd_ingest(cfg, corpus::dataset_id_from_string(ingest_dataset), skip_invalid);
            out << s.stats.dump(2) << '\n';
            if (s.errors_path) {
                out << s.rejected << " rejected rows listed in " << s.errors_path->string() << '\n';
            }
            return 0;
        }
        if (derive->parsed()) {
            std::vector<labeling::ProblemSetup> setups;
            if (derive_setup.given()) {
                setups.push_back(derive_setup.resolve());
            } else {
                setups = cfg.setups;
            }
            if (setups.empty()) throw ConfigError("no setups given on the command line or in the config");
            for (const auto& s : setups) out << pipeline::cmd_derive(cfg, s).line << '\n';
            return 0;
        }
        if (caption->parsed()) {
            pipeline::CaptionOptions opts;
            opts.model = caption_model;
            opts.dataset = corpus::dataset_id_from_string(caption_setup.dataset);
            if (caption_setup.given()) opts.setup = caption_setup.resolve();
            opts.limit = caption_limit;
            auto s = pipeline::cmd_caption(cfg, opts);
            out << pipeline::to_json(s).dump(2) << '\n';
            for (const auto& f : s.failures) err << "failed " << f.image_id << ": " << f.kind << ": " << f.message << '\n';
            return s.exit_code();
        }
        if (run_cmd->parsed()) {
            run_opts.task = pipeline::task_from_string(task);
            run_opts.setup = run_setup.resolve();
            run_opts.shots = shots;
            auto r = pipeline::cmd_run(cfg, run_opts);
            out << evalkit::render_table({r.report});
            out << "run directory: " << r.run_dir.string() << '\n';
            return 0;
        }
        if (cross->parsed()) {
            cross_opts.mode = tuner::mode_from_string(cross_mode);
            auto r = pipeline::cmd_crossdataset(cfg, cross_opts);
            out << evalkit::render_problem_table(r.reports);
            out << "run directory: " << r.run_dir.string() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace mllmsent::cli
