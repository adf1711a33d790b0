#include <doctest.h>

#include "mllmsent/config.hpp"
#include "mllmsent/error.hpp"
#include "mllmsent/toml_lite.hpp"
#include "test_env.hpp"

using namespace mllmsent;
using mllmsent::testing::TempDir;
using mllmsent::testing::write_file;

TEST_CASE("toml subset parses tables, arrays of tables and values") {
    auto j = toml::parse(R"(
# comment
title = "x"   # trailing
[run]
seed = 7
ratio = 0.5
on = true
list = [1, 2,
        3]
name.first = 'lit\eral'
[[items]]
a = 1
[[items]]
a = 2
inline = { k = "v", n = -3 }
[deep.nested]
s = "tab\tand é"
)");
    CHECK(j["title"] == "x");
    CHECK(j["run"]["seed"] == 7);
    CHECK(j["run"]["ratio"] == 0.5);
    CHECK(j["run"]["on"] == true);
    CHECK(j["run"]["list"] == nlohmann::json::array({1, 2, 3}));
    CHECK(j["run"]["name"]["first"] == "lit\\eral");
    REQUIRE(j["items"].size() == 2);
    CHECK(j["items"][1]["inline"]["n"] == -3);
    CHECK(j["deep"]["nested"]["s"] == "tab\tand \xc3\xa9");
}

TEST_CASE("toml errors carry the line number") {
    try {
        toml::parse("a = 1\nb = \n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(toml::parse("a = \"open\n"), ConfigError);
}

TEST_CASE("pipeline config loads and resolves paths") {
    TempDir tmp;
    write_file(tmp / "cfg" / "pipeline.toml", R"(
[run]
seed = 11
folds = 4
metric = "accuracy"
out = "../runs"

[cache]
path = "cache/captions.jsonl"

[[datasets]]
id = "percept5"
path = "data/votes.csv"

[[endpoints]]
name = "gpt4omini"
model = "gpt-4o-mini"
base_url = "https://api.example.com/v1"
auth_env_var = "OPENAI_API_KEY"
max_concurrency = 4
gen_params = { temperature = 0.5 }

[[endpoints]]
name = "minigpt4"
base_url = "http://localhost:9000/v1"

[[setups]]
dataset = "percept5"
threshold = 5
classes = 3

[tuner]
url = "http://localhost:8008"
hyper = { patience = 5 }

[fewshot]
shots = 10
)");
    auto cfg = config::PipelineConfig::load(tmp / "cfg" / "pipeline.toml");
    CHECK(cfg.seed == 11);
    CHECK(cfg.folds == 4);
    CHECK(cfg.metric == evalkit::Metric::accuracy);
    CHECK(cfg.out_dir == (tmp.path() / "runs").lexically_normal());
    CHECK(cfg.cache_path == tmp / "cfg" / "cache" / "captions.jsonl");
    CHECK(cfg.dataset(corpus::DatasetId::percept5).path == tmp / "cfg" / "data" / "votes.csv");
    CHECK(cfg.dataset(corpus::DatasetId::percept5).images_root == tmp / "cfg" / "data");
    CHECK(cfg.fewshot_shots == 10);
    const auto& g = cfg.endpoint("gpt4omini");
    CHECK(g.gen_params.temperature == 0.5);
    CHECK(g.gen_params.max_tokens == 300);
    CHECK(g.max_concurrency == 4);
    CHECK(cfg.endpoint("minigpt4").gen_params.num_beams == 1);
    REQUIRE(cfg.setups.size() == 1);
    CHECK(cfg.setups[0].name() == "sigma5_p3");
    CHECK(cfg.tuner.url == "http://localhost:8008");
    CHECK(cfg.tuner.hyper["patience"] == 5);
    CHECK(cfg.lexicon.dir == std::filesystem::path(MLLMSENT_DEFAULT_LEXICON_DIR));
    CHECK_THROWS_AS(cfg.endpoint("nope"), ConfigError);
    CHECK_THROWS_AS(cfg.dataset(corpus::DatasetId::deep2), ConfigError);
    auto resolved = config::resolved_json(cfg);
    CHECK(resolved["endpoints"][0]["model"] == "gpt-4o-mini");
}

TEST_CASE("config validation errors") {
    auto base = [](const std::string& extra) { return toml::parse(extra); };
    CHECK_THROWS_AS(config::PipelineConfig::from_json(base(R"(
[[endpoints]]
name = "a"
base_url = "http://x"
[[endpoints]]
name = "a"
base_url = "http://y"
)"),
                                                      "/"),
                    ConfigError);
    CHECK_THROWS_AS(config::PipelineConfig::from_json(base("[[endpoints]]\nname = \"a\"\n"), "/"), ConfigError);
    CHECK_THROWS_AS(config::PipelineConfig::from_json(base("[run]\nfolds = 1\n"), "/"), ConfigError);
    CHECK_THROWS_AS(config::PipelineConfig::from_json(base("[run]\nseed = \"x\"\n"), "/"), ConfigError);
    CHECK_THROWS_AS(config::PipelineConfig::from_json(base("[[setups]]\ndataset = \"percept5\"\nclasses = 4\n"), "/"),
                    ConfigError);
    CHECK_THROWS_AS(config::PipelineConfig::load("/nonexistent/pipeline.toml"), MissingFile);
}
