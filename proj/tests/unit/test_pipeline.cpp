#include <doctest.h>

#include <map>
#include <set>

#include "mllmsent/error.hpp"
#include "mllmsent/hashing.hpp"
#include "mllmsent/pipeline.hpp"
#include "mllmsent/toml_lite.hpp"
#include "mock_servers.hpp"
#include "test_env.hpp"

using namespace mllmsent;
using mllmsent::testing::MiniCorpus;
using mllmsent::testing::MockChatServer;
using mllmsent::testing::MockTunerServer;
using mllmsent::testing::read_file;
using mllmsent::testing::TempDir;
using mllmsent::testing::write_file;

namespace {

std::string caption_for(const MiniCorpus& c, std::size_t i) {
    static const std::map<std::string, std::string> word = {
        {"positive", "wonderful"}, {"neutral", "table"}, {"negative", "horrible"}};
    return c.ids[i] + " " + word.at(c.p3_labels[i]);
}

struct Bench {
    TempDir tmp;
    MiniCorpus corpus;
    MockChatServer chat;
    std::string tuner_url;
    std::size_t folds = 3;

    explicit Bench(std::size_t per_class = 5) : corpus(testing::make_mini_corpus(tmp / "data", per_class)) {
        for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
            chat.set_reply_for_image(corpus.image_sha256[i], caption_for(corpus, i));
        }
    }

    config::PipelineConfig config() const {
        std::string doc = "[run]\nseed = 42\nfolds = " + std::to_string(folds) +
                          "\nout = \"runs\"\n"
                          "[cache]\npath = \"captions.jsonl\"\n"
                          "[[datasets]]\nid = \"percept5\"\npath = \"" + corpus.csv.string() + "\"\n"
                          "[[endpoints]]\nname = \"mockvlm\"\nmodel = \"mock\"\nbase_url = \"" + chat.base_url() +
                          "\"\nmax_retries = 2\nbackoff_base = 0.001\nbackoff_max = 0.01\nmax_concurrency = 4\n"
                          "[tuner]\nurl = \"" + tuner_url + "\"\n";
        return config::PipelineConfig::from_json(toml::parse(doc), tmp.path());
    }

    void caption_all() {
        pipeline::CaptionOptions o;
        o.model = "mockvlm";
        auto s = pipeline::cmd_caption(config(), o);
        REQUIRE(s.failures.empty());
    }
};

labeling::ProblemSetup p3() { return labeling::ProblemSetup::make(corpus::DatasetId::percept5, 3, 3); }

pipeline::RunOptions run_opts(pipeline::Task task) {
    pipeline::RunOptions o;
    o.task = task;
    o.setup = p3();
    o.model = "mockvlm";
    o.captioner = "mockvlm";
    return o;
}

}  // namespace

TEST_CASE("ingest with skip-invalid lists rejected rows") {
    TempDir tmp;
    write_file(tmp / "votes.csv",
               "image_id,image_uri,v1,v2,v3,v4,v5\n"
               "a,a.jpg,5,0,0,0,0\n"
               "b,b.jpg,1,1,1,1,0\n"
               "c,c.jpg,0,0,0,0,5\n");
    auto cfg = config::PipelineConfig::from_json(
        toml::parse("[[datasets]]\nid = \"percept5\"\npath = \"votes.csv\"\n"), tmp.path());
    CHECK_THROWS_AS(pipeline::cmd_ingest(cfg, corpus::DatasetId::percept5, false), VoteSumViolation);
    auto s = pipeline::cmd_ingest(cfg, corpus::DatasetId::percept5, true);
    CHECK(s.rejected == 1);
    REQUIRE(s.errors_path.has_value());
    auto errors = nlohmann::json::parse(read_file(*s.errors_path));
    REQUIRE(errors.size() == 1);
    CHECK(errors[0]["image_id"] == "b");
    CHECK(errors[0]["error"] == "VoteSumViolation");
    CHECK(errors[0]["line"] == 3);
    CHECK(std::filesystem::exists(s.stats_path));
}

TEST_CASE("derive prints the subset size line") {
    Bench b;
    auto s = pipeline::cmd_derive(b.config(), p3());
    CHECK(s.line == "percept5 sigma3_p3 15");
    CHECK(std::filesystem::exists(s.path));
}

TEST_CASE("caption continues past a failing image and the rerun is free") {
    Bench b(4);
    b.chat.fail_image(b.corpus.image_sha256[3], 500);
    auto cfg = b.config();
    pipeline::CaptionOptions o;
    o.model = "mockvlm";
    o.limit = 10;
    auto first = pipeline::cmd_caption(cfg, o);
    CHECK(first.requested == 10);
    CHECK(first.captioned == 9);
    REQUIRE(first.failures.size() == 1);
    CHECK(first.failures[0].image_id == b.corpus.ids[3]);
    CHECK(first.exit_code() == 2);
    CHECK(std::filesystem::exists(cfg.cache_path));

    b.chat.reset_counters();
    auto second = pipeline::cmd_caption(cfg, o);
    CHECK(second.cache_hits == 9);
    CHECK(second.captioned == 0);
    CHECK(second.failures.size() == 1);
    CHECK(b.chat.requests() == 3);
}

TEST_CASE("caption exit code is 1 when every image fails") {
    Bench b(1);
    for (const auto& sha : b.corpus.image_sha256) b.chat.fail_image(sha, 400);
    pipeline::CaptionOptions o;
    o.model = "mockvlm";
    auto s = pipeline::cmd_caption(b.config(), o);
    CHECK(s.failures.size() == 3);
    CHECK(s.exit_code() == 1);
}

TEST_CASE("task1 with an oracle endpoint scores 1.0 and is reproducible") {
    Bench b;
    for (std::size_t i = 0; i < b.corpus.ids.size(); ++i) {
        b.chat.set_reply_for_image(b.corpus.image_sha256[i], b.corpus.p3_labels[i]);
    }
    auto cfg = b.config();
    auto r1 = pipeline::cmd_run(cfg, run_opts(pipeline::Task::task1));
    REQUIRE(r1.report.mean.has_value());
    CHECK(*r1.report.mean == doctest::Approx(1.0));
    CHECK(r1.report.per_fold_scores.size() == 3);
    CHECK(r1.report.system_id == "mockvlm");
    auto first = read_file(r1.run_dir / "report.json");
    auto r2 = pipeline::cmd_run(cfg, run_opts(pipeline::Task::task1));
    CHECK(r2.run_dir == r1.run_dir);
    CHECK(read_file(r2.run_dir / "report.json") == first);

    for (const auto* name : {"config.json", "versions.json", "report.txt", "report_chart.csv",
                             "manifests/folds.json", "manifests/fold_0.json"}) {
        CHECK_MESSAGE(std::filesystem::exists(r1.run_dir / name), name);
    }
    std::set<std::string> tested;
    for (std::size_t f = 0; f < 3; ++f) {
        auto m = nlohmann::json::parse(read_file(r1.run_dir / "manifests" / ("fold_" + std::to_string(f) + ".json")));
        std::set<std::string> train(m["train_ids"].begin(), m["train_ids"].end());
        for (const auto& id : m["test_ids"]) {
            CHECK(train.count(id.get<std::string>()) == 0);
            CHECK(tested.insert(id.get<std::string>()).second);
        }
    }
    CHECK(tested.size() == 15);
}

TEST_CASE("task1 counts unparseable replies as invalid") {
    Bench b;
    b.chat.set_reply_for_image(b.corpus.image_sha256[0], "I cannot tell.");
    for (std::size_t i = 1; i < b.corpus.ids.size(); ++i) {
        b.chat.set_reply_for_image(b.corpus.image_sha256[i], b.corpus.p3_labels[i]);
    }
    auto r = pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task1));
    CHECK(r.report.confusion.invalid_count() == 1);
    CHECK(r.report.invalid_rate == doctest::Approx(1.0 / 15.0));
}

TEST_CASE("lexicon baseline on captions") {
    Bench b;
    b.caption_all();
    auto cfg = b.config();
    auto r = pipeline::cmd_run(cfg, run_opts(pipeline::Task::task2a_lexicon));
    CHECK(r.report.system_id == "mockvlm+lexicon");
    REQUIRE(r.report.mean.has_value());
    CHECK(*r.report.mean == doctest::Approx(1.0));

    auto p5 = run_opts(pipeline::Task::task2a_lexicon);
    p5.setup = labeling::ProblemSetup::make(corpus::DatasetId::percept5, 3, 5);
    CHECK_THROWS_AS(pipeline::cmd_run(cfg, p5), UnsupportedSetup);
}

TEST_CASE("text tasks require cached captions") {
    Bench b;
    CHECK_THROWS_AS(pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2a_lexicon)), MissingCaptions);
    CHECK_THROWS_AS(pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2a_fewshot)), MissingCaptions);
}

TEST_CASE("few-shot examples come only from the training fold") {
    Bench b;
    b.caption_all();
    std::map<std::string, std::string> truth;
    for (std::size_t i = 0; i < b.corpus.ids.size(); ++i) truth[b.corpus.ids[i]] = b.corpus.p3_labels[i];
    b.chat.set_text_handler([&truth](const std::string& prompt) {
        auto pos = prompt.rfind("img");
        return truth.at(prompt.substr(pos, 7));
    });
    auto opts = run_opts(pipeline::Task::task2a_fewshot);
    opts.shots = 5;
    auto r = pipeline::cmd_run(b.config(), opts);
    CHECK(r.report.system_id == "mockvlm+mockvlm-fewshot");
    REQUIRE(r.report.mean.has_value());
    CHECK(*r.report.mean == doctest::Approx(1.0));
    for (std::size_t f = 0; f < 3; ++f) {
        auto m = nlohmann::json::parse(read_file(r.run_dir / "manifests" / ("fold_" + std::to_string(f) + ".json")));
        std::set<std::string> train(m["train_ids"].begin(), m["train_ids"].end());
        std::set<std::string> test(m["test_ids"].begin(), m["test_ids"].end());
        REQUIRE(m["shot_ids"].size() == 5);
        for (const auto& id : m["shot_ids"]) {
            CHECK(train.count(id.get<std::string>()) == 1);
            CHECK(test.count(id.get<std::string>()) == 0);
        }
    }
}

TEST_CASE("tuner tasks fail fast without a worker") {
    Bench b;
    b.caption_all();
    b.chat.reset_counters();
    CHECK_THROWS_AS(pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2b)), TunerUnavailable);
    CHECK_THROWS_AS(pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2a_probe)), TunerUnavailable);
    b.tuner_url = "http://127.0.0.1:1";
    CHECK_THROWS_AS(pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2b)), TunerUnavailable);
    pipeline::CrossOptions cross;
    cross.captioner = "mockvlm";
    CHECK_THROWS_AS(pipeline::cmd_crossdataset(b.config(), cross), TunerUnavailable);
    CHECK(b.chat.requests() == 0);
}

TEST_CASE("fine-tuning and probing through the tuner protocol") {
    Bench b;
    MockTunerServer tuner;
    b.tuner_url = tuner.base_url();
    b.caption_all();
    std::map<std::string, int> oracle;
    for (std::size_t i = 0; i < b.corpus.ids.size(); ++i) {
        auto setup = p3();
        std::size_t idx = 0;
        while (setup.labels[idx] != b.corpus.p3_labels[i]) ++idx;
        oracle[caption_for(b.corpus, i)] = labeling::class_id(idx, 3);
    }
    tuner.set_oracle(oracle);

    auto finetune = run_opts(pipeline::Task::task2b);
    finetune.model = "";
    auto r = pipeline::cmd_run(b.config(), finetune);
    CHECK(r.report.system_id == "mockvlm+prajjwal1/bert-tiny-finetune");
    REQUIRE(r.report.mean.has_value());
    CHECK(*r.report.mean == doctest::Approx(1.0));
    auto reqs = tuner.train_requests();
    REQUIRE(reqs.size() == 3);
    CHECK(reqs[0]["mode"] == "finetune");
    CHECK(reqs[0]["samples"].size() == 10);
    CHECK(reqs[0]["hyper"]["learning_rate"] == 2e-5);
    CHECK(reqs[1]["hyper"]["seed"] == 43);
    CHECK(tuner.live_models() == 0);
    auto m = nlohmann::json::parse(read_file(r.run_dir / "manifests" / "fold_0.json"));
    CHECK(m["training"]["stopped_early"] == true);

    auto probe = run_opts(pipeline::Task::task2a_probe);
    probe.model = "";
    auto rp = pipeline::cmd_run(b.config(), probe);
    CHECK(rp.report.system_id == "mockvlm+prajjwal1/bert-tiny-probe");
    CHECK(tuner.train_requests().back()["hyper"]["learning_rate"] == 2e-3);
    CHECK(rp.run_dir.filename().string().find('/') == std::string::npos);
}

TEST_CASE("leakage check keys on dataset and image id") {
    using pipeline::ManifestEntry;
    std::vector<ManifestEntry> train{{corpus::DatasetId::percept5, "a"}, {corpus::DatasetId::percept5, "b"}};
    CHECK_NOTHROW(pipeline::check_leakage(train, {{corpus::DatasetId::deep2, "a"}}));
    CHECK_THROWS_AS(pipeline::check_leakage(train, {{corpus::DatasetId::percept5, "b"}}), LeakageDetected);
}

TEST_CASE("cross-dataset protocol trains on one corpus and evaluates on the other") {
    TempDir tmp;
    MockChatServer chat;
    MockTunerServer tuner;
    std::string percept = "image_id,image_uri,v1,v2,v3,v4,v5\n";
    std::string deep = "image_id,image_uri,v1,v2\n";
    auto add_image = [&](const std::string& id, const std::string& caption) {
        std::string bytes = "\xff\xd8\xff\xe0 image " + id;
        write_file(tmp / "images" / (id + ".jpg"), bytes);
        chat.set_reply_for_image(sha256_hex(bytes), caption);
    };
    for (int i = 0; i < 10; ++i) {
        auto pid = "p" + std::to_string(i);
        auto did = "d" + std::to_string(i);
        percept += pid + ",images/" + pid + ".jpg," + (i % 2 ? "0,0,0,2,3" : "3,2,0,0,0") + "\n";
        deep += did + ",images/" + did + ".jpg," + (i % 2 ? "5,0" : "0,5") + "\n";
        add_image(pid, "percept caption " + pid);
        add_image(did, "deep caption " + did);
    }
    write_file(tmp / "percept.csv", percept);
    write_file(tmp / "deep.csv", deep);
    auto doc = "[run]\nfolds = 5\nout = \"runs\"\n"
               "[[datasets]]\nid = \"percept5\"\npath = \"percept.csv\"\n"
               "[[datasets]]\nid = \"deep2\"\npath = \"deep.csv\"\n"
               "[[endpoints]]\nname = \"mockvlm\"\nbase_url = \"" + chat.base_url() + "\"\n"
               "[tuner]\nurl = \"" + tuner.base_url() + "\"\n";
    auto cfg = config::PipelineConfig::from_json(toml::parse(doc), tmp.path());
    for (auto ds : {corpus::DatasetId::percept5, corpus::DatasetId::deep2}) {
        pipeline::CaptionOptions o;
        o.model = "mockvlm";
        o.dataset = ds;
        REQUIRE(pipeline::cmd_caption(cfg, o).failures.empty());
    }
    std::map<std::string, int> oracle;
    for (int l : {3, 5}) {
        auto eval = pipeline::load_subset(cfg, labeling::ProblemSetup::make(corpus::DatasetId::deep2, l, 2));
        CHECK(eval.instances.size() == 10);
        for (const auto& inst : eval.instances) {
            oracle["deep caption " + inst.image_id] = labeling::class_id(inst.label_index, 2);
        }
    }
    tuner.set_oracle(oracle);

    pipeline::CrossOptions opts;
    opts.captioner = "mockvlm";
    auto r = pipeline::cmd_crossdataset(cfg, opts);
    REQUIRE(r.reports.size() == 2);
    for (const auto& rep : r.reports) {
        CHECK(rep.metric == evalkit::Metric::accuracy);
        CHECK(rep.setup.dataset == corpus::DatasetId::deep2);
        REQUIRE(rep.mean.has_value());
        CHECK(*rep.mean == doctest::Approx(1.0));
        CHECK(rep.per_fold_scores.size() == 5);
    }
    CHECK(r.reports[0].setup.threshold == 3);
    CHECK(r.reports[1].setup.threshold == 5);

    auto reqs = tuner.train_requests();
    REQUIRE(reqs.size() == 2);
    for (const auto& req : reqs) {
        CHECK(req["samples"].size() == 10);
        for (const auto& s : req["samples"]) CHECK(s["text"].get<std::string>().rfind("percept", 0) == 0);
    }
    for (const auto* tag : {"sigma3", "sigma5"}) {
        auto train = nlohmann::json::parse(read_file(r.run_dir / "manifests" / (std::string("train_") + tag + ".json")));
        auto eval = nlohmann::json::parse(read_file(r.run_dir / "manifests" / (std::string("eval_") + tag + ".json")));
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& e : train["instances"]) seen.emplace(e["dataset"], e["image_id"]);
        for (const auto& e : eval["instances"]) CHECK(seen.count({e["dataset"], e["image_id"]}) == 0);
        CHECK(train["instances"][0]["dataset"] == "percept5");
        CHECK(eval["instances"][0]["dataset"] == "deep2");
    }
    auto table = read_file(r.run_dir / "report.txt");
    CHECK(table.find("problem") != std::string::npos);
    CHECK(table.find("sigma3_p2") != std::string::npos);
    CHECK(table.find("sigma5_p2") != std::string::npos);
}

TEST_CASE("report command aggregates run directories") {
    Bench b;
    for (std::size_t i = 0; i < b.corpus.ids.size(); ++i) {
        b.chat.set_reply_for_image(b.corpus.image_sha256[i], b.corpus.p3_labels[i]);
    }
    pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task1));
    b.caption_all();
    pipeline::cmd_run(b.config(), run_opts(pipeline::Task::task2a_lexicon));
    auto reports = pipeline::cmd_report({b.tmp / "runs"}, b.tmp / "summary", "summary");
    CHECK(reports.size() == 2);
    CHECK(std::filesystem::exists(b.tmp / "summary" / "summary.json"));
    CHECK(std::filesystem::exists(b.tmp / "summary" / "summary.txt"));
    CHECK(std::filesystem::exists(b.tmp / "summary" / "summary_chart.csv"));
    CHECK_THROWS_AS(pipeline::cmd_report({b.tmp / "nothing"}, b.tmp / "summary"), MissingFile);
}
