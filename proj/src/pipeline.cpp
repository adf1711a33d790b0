#include "mllmsent/pipeline.hpp"

#include <httplib.h>
#include <openssl/opensslv.h>

#include <boost/version.hpp>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "mllmsent/caption_cache.hpp"
#include "mllmsent/captioning.hpp"
#include "mllmsent/chat_client.hpp"
#include "mllmsent/error.hpp"
#include "mllmsent/folds.hpp"
#include "mllmsent/label_parse.hpp"
#include "mllmsent/lexicon.hpp"
#include "mllmsent/metrics.hpp"
#include "mllmsent/prompts.hpp"

namespace mllmsent::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    ensure_dir(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' || c == '+';
        out += ok ? c : '-';
    }
    return out;
}

void write_snapshot(const fs::path& run_dir, const config::PipelineConfig& cfg,
                    const nlohmann::json& command) {
    write_json(run_dir / "config.json", {{"command", command},
                                         {"document", cfg.document},
                                         {"resolved", config::resolved_json(cfg)}});
    write_json(run_dir / "versions.json", versions());
    if (!cfg.source.empty() && fs::exists(cfg.source)) {
        std::error_code ec;
        fs::copy_file(cfg.source, run_dir / "config.toml", fs::copy_options::overwrite_existing, ec);
        if (ec) throw IoError("cannot copy config: " + ec.message());
    }
}

std::unique_ptr<gateway::CaptionCache> open_cache(const config::PipelineConfig& cfg) {
    if (!cfg.cache_path.empty()) ensure_dir(cfg.cache_path.parent_path());
    return std::make_unique<gateway::CaptionCache>(cfg.cache_path);
}

std::vector<std::string> captions_for(const labeling::LabeledSubset& subset,
                                      const gateway::CaptionCache& cache,
                                      const gateway::EndpointConfig& ep) {
    const auto fingerprint = gateway::caption_fingerprint(ep);
    std::vector<std::string> texts;
    std::vector<std::string> missing;
    for (const auto& inst : subset.instances) {
        auto hit = cache.find(inst.image_id, ep.name, fingerprint);
        if (hit) {
            texts.push_back(hit->caption_text);
        } else {
            missing.push_back(inst.image_id);
        }
    }
    if (!missing.empty()) {
        throw MissingCaptions(std::to_string(missing.size()) + " of " +
                              std::to_string(subset.instances.size()) + " " +
                              std::string(corpus::to_string(subset.setup.dataset)) +
                              " images have no caption from '" + ep.name + "' (first: " +
                              missing.front() + "); run `caption` first");
    }
    return texts;
}

nlohmann::json prediction_entry(const labeling::LabeledInstance& inst,
                                const labeling::ProblemSetup& setup,
                                std::optional<std::size_t> predicted, std::string_view outcome) {
    return {{"image_id", inst.image_id},
            {"truth", setup.labels.at(inst.label_index)},
            {"predicted", predicted ? nlohmann::json(setup.labels.at(*predicted)) : nlohmann::json(nullptr)},
            {"outcome", outcome}};
}

std::vector<std::string> ids_of(const labeling::LabeledSubset& s, const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(s.instances[i].image_id);
    return out;
}

void assert_disjoint(const std::vector<std::string>& train, const std::vector<std::string>& test) {
    std::set<std::string> seen(train.begin(), train.end());
    for (const auto& id : test) {
        if (seen.count(id)) throw LeakageDetected("image " + id + " is in both training and test data");
    }
}

tuner::HyperParams hyper_for(const config::PipelineConfig& cfg, tuner::Mode mode) {
    auto h = tuner::HyperParams::defaults_for(mode);
    h.seed = cfg.seed;
    return tuner::merge_hyper(h, cfg.tuner.hyper);
}

std::string base_model_for(const config::PipelineConfig& cfg, tuner::Mode mode, const std::string& override_) {
    if (!override_.empty()) return override_;
    return mode == tuner::Mode::probe ? cfg.tuner.probe_base_model : cfg.tuner.finetune_base_model;
}

/// Predicted label index for a tuner class id, empty when out of range.
std::optional<std::size_t> label_from_class(int class_id, int classes) {
    if (class_id < 0 || class_id >= classes) return std::nullopt;
    return labeling::label_index_from_class_id(class_id, classes);
}

void require_healthy(const tuner::TunerClient& client, const std::string& url) {
    if (!client.healthy()) throw TunerUnavailable("tuner at " + url + " did not answer /healthz");
}

struct FoldOutput {
    evalkit::ConfusionMatrix cm;
    nlohmann::json manifest;
};

}  // namespace

std::string_view to_string(Task t) {
    switch (t) {
        case Task::task1: return "task1";
        case Task::task2a_lexicon: return "task2a_lexicon";
        case Task::task2a_fewshot: return "task2a_fewshot";
        case Task::task2a_probe: return "task2a_probe";
        case Task::task2b: return "task2b";
    }
    return "task1";
}

Task task_from_string(std::string_view s) {
    for (auto t : {Task::task1, Task::task2a_lexicon, Task::task2a_fewshot, Task::task2a_probe, Task::task2b}) {
        if (to_string(t) == s) return t;
    }
    throw ConfigError("unknown task '" + std::string(s) + "'");
}

nlohmann::json versions() {
    return {{"mllmsent", kVersion},
            {"compiler", __VERSION__},
            {"cpp_standard", __cplusplus},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cpp_httplib", CPPHTTPLIB_VERSION},
            {"boost", BOOST_LIB_VERSION},
            {"openssl", OPENSSL_VERSION_TEXT},
            {"report_schema", evalkit::kReportSchema}};
}

// ingest

IngestSummary cmd_ingest(const config::PipelineConfig& cfg, corpus::DatasetId dataset, bool skip_invalid) {
    const auto& dc = cfg.dataset(dataset);
    auto profile = dc.profile;
    profile.skip_invalid = skip_invalid;
    auto result = corpus::ingest(dc.path, profile);

    IngestSummary s;
    s.dataset = dataset;
    s.stats = corpus::to_json(corpus::stats(result.dataset), result.dataset);
    s.rejected = result.rejected.size();
    const std::string name(corpus::to_string(dataset));
    s.stats_path = cfg.out_dir / ("ingest_" + name + ".json");
    write_json(s.stats_path, s.stats);
    if (skip_invalid) {
        s.errors_path = cfg.out_dir / ("ingest_" + name + "_errors.json");
        write_json(*s.errors_path, corpus::to_json(result.rejected));
    }
    return s;
}

// derive

labeling::LabeledSubset load_subset(const config::PipelineConfig& cfg, const labeling::ProblemSetup& setup) {
    const auto& dc = cfg.dataset(setup.dataset);
    auto result = corpus::ingest(dc.path, dc.profile);
    return labeling::build_subset(result.dataset, setup);
}

DeriveSummary cmd_derive(const config::PipelineConfig& cfg, const labeling::ProblemSetup& setup) {
    auto subset = load_subset(cfg, setup);
    DeriveSummary s;
    s.setup = setup;
    s.size = subset.instances.size();
    const std::string ds(corpus::to_string(setup.dataset));
    s.path = cfg.out_dir / "subsets" / (ds + "_" + setup.name() + ".jsonl");
    ensure_dir(s.path.parent_path());
    labeling::write_jsonl(subset, s.path);
    s.line = ds + " " + setup.name() + " " + std::to_string(s.size);
    return s;
}

// caption

int CaptionSummary::exit_code() const {
    if (failures.empty()) return 0;
    return failures.size() < requested ? 2 : 1;
}

nlohmann::json to_json(const CaptionSummary& s) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : s.failures) {
        failures.push_back({{"image_id", f.image_id}, {"kind", f.kind}, {"message", f.message}});
    }
    return {{"model", s.model},         {"requested", s.requested}, {"cache_hits", s.cache_hits},
            {"captioned", s.captioned}, {"retries", s.retries},     {"failures", failures}};
}

CaptionSummary cmd_caption(const config::PipelineConfig& cfg, const CaptionOptions& opts) {
    const auto& ep = cfg.endpoint(opts.model);
    std::vector<std::pair<std::string, std::string>> images;  // id, uri
    corpus::DatasetId dataset = opts.setup ? opts.setup->dataset : opts.dataset;
    const auto& dc = cfg.dataset(dataset);
    if (opts.setup) {
        for (const auto& inst : load_subset(cfg, *opts.setup).instances) {
            images.emplace_back(inst.image_id, inst.image_uri);
        }
    } else {
        for (const auto& rec : corpus::ingest(dc.path, dc.profile).dataset.records) {
            images.emplace_back(rec.image_id, rec.image_uri);
        }
    }
    if (opts.limit && *opts.limit < images.size()) images.resize(*opts.limit);

    auto cache = open_cache(cfg);
    gateway::ChatClient client(ep, cfg.seed);

    struct Slot {
        bool ok = false;
        bool hit = false;
        int retries = 0;
        std::optional<CaptionFailure> failure;
    };
    std::vector<Slot> slots(images.size());
    gateway::run_bounded(images.size(), static_cast<std::size_t>(ep.max_concurrency), [&](std::size_t i) {
        const auto& [id, uri] = images[i];
        try {
            auto outcome = gateway::caption_image(
                client, id, [&, uri = uri] { return gateway::load_image(uri, dc.images_root); }, *cache);
            slots[i].ok = true;
            slots[i].hit = outcome.cache_hit;
            slots[i].retries = outcome.retries;
        } catch (const Error& e) {
            slots[i].failure = CaptionFailure{id, e.kind(), e.what()};
        } catch (const std::exception& e) {
            slots[i].failure = CaptionFailure{id, "Error", e.what()};
        }
    });

    CaptionSummary s;
    s.model = ep.name;
    s.requested = images.size();
    for (auto& slot : slots) {
        if (slot.failure) {
            s.failures.push_back(std::move(*slot.failure));
            continue;
        }
        s.retries += static_cast<std::size_t>(slot.retries);
        (slot.hit ? s.cache_hits : s.captioned) += 1;
    }
    return s;
}

// run

RunResult cmd_run(const config::PipelineConfig& cfg, const RunOptions& opts) {
    const auto& setup = opts.setup;
    const bool uses_tuner = opts.task == Task::task2a_probe || opts.task == Task::task2b;
    const auto mode = opts.task == Task::task2a_probe ? tuner::Mode::probe : tuner::Mode::finetune;

    std::optional<tuner::TunerClient> tuner_client;
    if (uses_tuner) {
        tuner_client.emplace(cfg.tuner.url, cfg.tuner.timeout);
        require_healthy(*tuner_client, cfg.tuner.url);
    }

    std::optional<lexicon::LexiconTable> lex;
    if (opts.task == Task::task2a_lexicon) {
        lex = lexicon::LexiconTable::load_dir(cfg.lexicon.dir);
        lexicon::classify_text("", setup, *lex, cfg.lexicon.options);  // rejects unsupported setups
    }

    std::string system_id;
    switch (opts.task) {
        case Task::task1: system_id = opts.model; break;
        case Task::task2a_lexicon: system_id = opts.captioner + "+lexicon"; break;
        case Task::task2a_fewshot: system_id = opts.captioner + "+" + opts.model + "-fewshot"; break;
        case Task::task2a_probe:
        case Task::task2b:
            system_id = opts.captioner + "+" + base_model_for(cfg, mode, opts.model) +
                        (mode == tuner::Mode::probe ? "-probe" : "-finetune");
            break;
    }

    auto subset = load_subset(cfg, setup);
    const auto& dc = cfg.dataset(setup.dataset);

    std::vector<std::string> captions;
    if (opts.task != Task::task1) {
        auto cache = open_cache(cfg);
        captions = captions_for(subset, *cache, cfg.endpoint(opts.captioner));
    }

    std::unique_ptr<gateway::ChatClient> chat;
    if (opts.task == Task::task1 || opts.task == Task::task2a_fewshot) {
        chat = std::make_unique<gateway::ChatClient>(cfg.endpoint(opts.model), cfg.seed);
    }
    std::optional<tuner::HyperParams> hyper;
    if (uses_tuner) hyper = hyper_for(cfg, mode);
    const std::size_t shots = opts.shots.value_or(cfg.fewshot_shots);

    auto plan = evalkit::make_folds(subset.ids(), subset.labels(), cfg.folds, cfg.seed);
    const auto C = static_cast<std::size_t>(setup.classes);

    std::vector<FoldOutput> folds;
    for (std::size_t f = 0; f < plan.k; ++f) {
        auto train = plan.train_indices(f);
        auto test = plan.test_indices(f);
        auto train_ids = ids_of(subset, train);
        auto test_ids = ids_of(subset, test);
        assert_disjoint(train_ids, test_ids);

        FoldOutput out{evalkit::ConfusionMatrix(C), nlohmann::json::object()};
        out.manifest["fold"] = f;
        out.manifest["train_ids"] = train_ids;
        out.manifest["test_ids"] = test_ids;

        // one entry per test instance: predicted label index or empty, plus outcome tag
        std::vector<std::optional<std::size_t>> predicted(test.size());
        std::vector<std::string> outcome(test.size(), "label");

        if (opts.task == Task::task1 || opts.task == Task::task2a_fewshot) {
            std::vector<gateway::FewShotExample> examples;
            if (opts.task == Task::task2a_fewshot) {
                auto picked = evalkit::seeded_sample(train, std::min(shots, train.size()),
                                                     cfg.seed ^ (kGolden * (f + 1)));
                std::vector<std::string> shot_ids;
                for (auto i : picked) {
                    examples.push_back({captions[i], subset.instances[i].label_index});
                    shot_ids.push_back(subset.instances[i].image_id);
                }
                assert_disjoint(shot_ids, test_ids);
                out.manifest["shot_ids"] = shot_ids;
            }
            gateway::run_bounded(test.size(), static_cast<std::size_t>(chat->config().max_concurrency),
                                 [&](std::size_t j) {
                const auto& inst = subset.instances[test[j]];
                gateway::LabelParse parse;
                if (opts.task == Task::task1) {
                    auto image = gateway::load_image(inst.image_uri, dc.images_root);
                    parse = gateway::classify_image(*chat, image, setup);
                } else {
                    auto prompt = gateway::build_fewshot_prompt(setup, examples, captions[test[j]]);
                    parse = gateway::parse_class_reply(chat->complete({prompt, std::nullopt}).text, setup);
                }
                if (parse.is_label()) predicted[j] = parse.label_index;
                outcome[j] = std::string(gateway::to_string(parse.outcome));
            });
        } else if (opts.task == Task::task2a_lexicon) {
            for (std::size_t j = 0; j < test.size(); ++j) {
                predicted[j] = lexicon::classify_text(captions[test[j]], setup, *lex, cfg.lexicon.options);
            }
        } else {
            tuner::TrainRequest req;
            req.mode = mode;
            req.base_model = base_model_for(cfg, mode, opts.model);
            req.setup = setup;
            req.hyper = *hyper;
            req.hyper.seed = hyper->seed + f;
            for (auto i : train) {
                req.samples.push_back({captions[i], labeling::class_id(subset.instances[i].label_index, setup.classes)});
            }
            auto handle = tuner_client->train(req);
            std::vector<std::string> texts;
            for (auto i : test) texts.push_back(captions[i]);
            auto preds = tuner_client->predict(handle.model_id, texts);
            tuner_client->remove(handle.model_id);
            for (std::size_t j = 0; j < test.size(); ++j) {
                predicted[j] = label_from_class(preds[j].class_id, setup.classes);
                if (!predicted[j]) outcome[j] = "unparseable";
            }
            out.manifest["training"] = {{"model_id", handle.model_id},
                                        {"best_val_f1", handle.metrics.best_val_f1},
                                        {"epochs_run", handle.metrics.epochs_run},
                                        {"stopped_early", handle.metrics.stopped_early},
                                        {"hyper", tuner::to_json(req.hyper)}};
        }

        nlohmann::json preds = nlohmann::json::array();
        for (std::size_t j = 0; j < test.size(); ++j) {
            const auto& inst = subset.instances[test[j]];
            if (predicted[j]) {
                out.cm.add(inst.label_index, *predicted[j]);
            } else {
                out.cm.add_invalid(inst.label_index);
            }
            preds.push_back(prediction_entry(inst, setup, predicted[j], outcome[j]));
        }
        out.manifest["predictions"] = std::move(preds);
        folds.push_back(std::move(out));
    }

    std::vector<evalkit::ConfusionMatrix> cms;
    for (const auto& f : folds) cms.push_back(f.cm);
    RunResult result;
    result.report = evalkit::make_report(setup, system_id, std::string(to_string(opts.task)), cfg.metric, cms);
    result.run_dir = cfg.out_dir / sanitize(std::string(to_string(opts.task)) + "_" + system_id + "_" +
                                            std::string(corpus::to_string(setup.dataset)) + "_" + setup.name());
    ensure_dir(result.run_dir);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        write_json(result.run_dir / "manifests" / ("fold_" + std::to_string(f) + ".json"), folds[f].manifest);
    }
    write_json(result.run_dir / "manifests" / "folds.json",
               {{"k", plan.k}, {"seed", plan.seed}, {"assignments", plan.assignments}});
    write_snapshot(result.run_dir, cfg,
                   {{"command", "run"},
                    {"task", to_string(opts.task)},
                    {"setup", labeling::to_json(setup)},
                    {"model", opts.model},
                    {"captioner", opts.captioner},
                    {"shots", opts.task == Task::task2a_fewshot ? nlohmann::json(shots) : nlohmann::json(nullptr)}});
    evalkit::emit_report({result.report}, result.run_dir, "report");
    return result;
}

// cross-dataset

void check_leakage(const std::vector<ManifestEntry>& train, const std::vector<ManifestEntry>& eval) {
    std::set<std::pair<corpus::DatasetId, std::string>> seen;
    for (const auto& e : train) seen.emplace(e.dataset, e.image_id);
    for (const auto& e : eval) {
        if (seen.count({e.dataset, e.image_id})) {
            throw LeakageDetected(std::string(corpus::to_string(e.dataset)) + " image " + e.image_id +
                                  " appears in the training manifest");
        }
    }
}

CrossResult cmd_crossdataset(const config::PipelineConfig& cfg, const CrossOptions& opts) {
    tuner::TunerClient client(cfg.tuner.url, cfg.tuner.timeout);
    require_healthy(client, cfg.tuner.url);
    const auto& ep = cfg.endpoint(opts.captioner);
    const auto base_model = base_model_for(cfg, opts.mode, opts.base_model);
    const auto system_id = opts.captioner + "+" + base_model +
                           (opts.mode == tuner::Mode::probe ? "-probe" : "-finetune");
    auto cache = open_cache(cfg);

    CrossResult result;
    result.run_dir = cfg.out_dir / sanitize("cross_dataset_" + system_id);
    for (int l : opts.thresholds) {
        auto train_setup = labeling::ProblemSetup::make(corpus::DatasetId::percept5, l, 2);
        auto eval_setup = labeling::ProblemSetup::make(corpus::DatasetId::deep2, l, 2);
        auto train = load_subset(cfg, train_setup);
        auto eval = load_subset(cfg, eval_setup);

        std::vector<ManifestEntry> train_manifest;
        std::vector<ManifestEntry> eval_manifest;
        for (const auto& i : train.instances) train_manifest.push_back({train_setup.dataset, i.image_id});
        for (const auto& i : eval.instances) eval_manifest.push_back({eval_setup.dataset, i.image_id});
        check_leakage(train_manifest, eval_manifest);

        auto train_text = captions_for(train, *cache, ep);
        auto eval_text = captions_for(eval, *cache, ep);

        tuner::TrainRequest req;
        req.mode = opts.mode;
        req.base_model = base_model;
        req.setup = train_setup;
        req.hyper = hyper_for(cfg, opts.mode);
        for (std::size_t i = 0; i < train.instances.size(); ++i) {
            req.samples.push_back({train_text[i], labeling::class_id(train.instances[i].label_index, 2)});
        }
        auto handle = client.train(req);
        auto preds = client.predict(handle.model_id, eval_text);
        client.remove(handle.model_id);

        auto plan = evalkit::make_folds(eval.ids(), eval.labels(), cfg.folds, cfg.seed);
        std::vector<evalkit::ConfusionMatrix> cms(plan.k, evalkit::ConfusionMatrix(2));
        nlohmann::json pred_log = nlohmann::json::array();
        for (std::size_t i = 0; i < eval.instances.size(); ++i) {
            const auto& inst = eval.instances[i];
            auto p = label_from_class(preds[i].class_id, 2);
            auto& cm = cms[plan.fold_of[i]];
            if (p) {
                cm.add(inst.label_index, *p);
            } else {
                cm.add_invalid(inst.label_index);
            }
            pred_log.push_back(prediction_entry(inst, eval_setup, p, p ? "label" : "unparseable"));
        }
        result.reports.push_back(
            evalkit::make_report(eval_setup, system_id, "cross_dataset", evalkit::Metric::accuracy, cms));

        const auto tag = "sigma" + std::to_string(l);
        auto entries = [](const std::vector<ManifestEntry>& m) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& e : m) out.push_back({{"dataset", corpus::to_string(e.dataset)}, {"image_id", e.image_id}});
            return out;
        };
        write_json(result.run_dir / "manifests" / ("train_" + tag + ".json"),
                   {{"setup", labeling::to_json(train_setup)},
                    {"instances", entries(train_manifest)},
                    {"training", {{"model_id", handle.model_id},
                                  {"best_val_f1", handle.metrics.best_val_f1},
                                  {"epochs_run", handle.metrics.epochs_run},
                                  {"stopped_early", handle.metrics.stopped_early},
                                  {"hyper", tuner::to_json(req.hyper)}}}});
        write_json(result.run_dir / "manifests" / ("eval_" + tag + ".json"),
                   {{"setup", labeling::to_json(eval_setup)},
                    {"instances", entries(eval_manifest)},
                    {"fold_assignments", plan.assignments},
                    {"predictions", pred_log}});
    }

    write_snapshot(result.run_dir, cfg,
                   {{"command", "cross-dataset"},
                    {"captioner", opts.captioner},
                    {"mode", tuner::to_string(opts.mode)},
                    {"base_model", base_model},
                    {"thresholds", opts.thresholds}});
    evalkit::emit_report(result.reports, result.run_dir, "report", true, evalkit::TableLayout::by_problem);
    return result;
}

// report

std::vector<evalkit::EvalReport> cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                            const std::string& stem, evalkit::TableLayout layout) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::recursive_directory_iterator(in)) {
                if (entry.is_regular_file() && entry.path().filename() == "report.json") found.push_back(entry.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    if (files.empty()) throw MissingFile("no report.json found under the given inputs");

    std::vector<evalkit::EvalReport> reports;
    for (const auto& f : files) {
        for (auto& r : evalkit::load_reports(f)) reports.push_back(std::move(r));
    }
    evalkit::compare(reports);
    evalkit::emit_report(reports, out_dir, stem, true, layout);
    return reports;
}

}  // namespace mllmsent::pipeline
