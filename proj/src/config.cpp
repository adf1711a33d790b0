#include "mllmsent/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mllmsent/error.hpp"
#include "mllmsent/toml_lite.hpp"

namespace mllmsent::config {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

DatasetConfig dataset_from(const nlohmann::json& j, const std::filesystem::path& base) {
    DatasetConfig d;
    d.id = corpus::dataset_id_from_string(get_or<std::string>(j, "id", ""));
    d.path = resolve(base, get_or<std::string>(j, "path", ""));
    if (d.path.empty()) throw ConfigError("dataset '" + std::string(corpus::to_string(d.id)) + "' has no path");
    d.images_root = resolve(base, get_or<std::string>(j, "images_root", ""));
    if (d.images_root.empty()) d.images_root = d.path.parent_path();

    auto& p = d.profile;
    p = corpus::IngestProfile::for_dataset(d.id);
    p.layout = corpus::layout_from_string(get_or<std::string>(j, "layout", "normalized"));
    auto delim = get_or<std::string>(j, "delimiter", ",");
    if (delim == "\\t" || delim == "tab") delim = "\t";
    if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
    p.delimiter = delim[0];
    p.id_column = get_or<std::string>(j, "id_column", p.id_column);
    p.uri_column = get_or<std::string>(j, "uri_column", p.uri_column);
    p.label_column = get_or<std::string>(j, "label_column", p.label_column);
    p.vote_columns = get_or<std::vector<std::string>>(j, "vote_columns", {});
    if (j.contains("categories")) p.category_names = j["categories"].get<std::vector<std::string>>();
    p.evaluator_count = get_or<int>(j, "evaluators", p.evaluator_count);
    if (j.contains("expected_records")) p.expected_records = j["expected_records"].get<std::size_t>();
    return d;
}

gateway::EndpointConfig endpoint_from(const nlohmann::json& j) {
    gateway::EndpointConfig e;
    e.name = get_or<std::string>(j, "name", "");
    e.model = get_or<std::string>(j, "model", "");
    e.base_url = get_or<std::string>(j, "base_url", "");
    e.auth_env_var = get_or<std::string>(j, "auth_env_var", "");
    e.request_timeout = get_or<double>(j, "request_timeout", e.request_timeout);
    e.max_retries = get_or<int>(j, "max_retries", e.max_retries);
    e.max_concurrency = get_or<int>(j, "max_concurrency", e.max_concurrency);
    e.backoff_base = get_or<double>(j, "backoff_base", e.backoff_base);
    e.backoff_max = get_or<double>(j, "backoff_max", e.backoff_max);
    try {
        e.gen_params = gateway::merge_params(gateway::GenerationParams::defaults_for(e.name),
                                             j.value("gen_params", nlohmann::json{}));
        e.validate();
    } catch (const InvalidEndpointConfig& err) {
        throw ConfigError(err.what());
    }
    return e;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("config file not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto doc = toml::parse(buf.str());
    auto base = std::filesystem::absolute(path).parent_path();
    auto cfg = from_json(doc, base);
    cfg.source = std::filesystem::absolute(path);
    return cfg;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base) {
    PipelineConfig cfg;
    cfg.document = doc;
    const auto run = doc.value("run", nlohmann::json::object());
    cfg.seed = get_or<std::uint64_t>(run, "seed", cfg.seed);
    cfg.folds = get_or<std::size_t>(run, "folds", cfg.folds);
    if (cfg.folds < 2) throw ConfigError("run.folds must be >= 2");
    cfg.metric = evalkit::metric_from_string(get_or<std::string>(run, "metric", "f1_macro"));
    cfg.out_dir = resolve(base, get_or<std::string>(run, "out", "runs"));

    const auto cache = doc.value("cache", nlohmann::json::object());
    cfg.cache_path = resolve(base, get_or<std::string>(cache, "path", "captions.jsonl"));

    const auto fewshot = doc.value("fewshot", nlohmann::json::object());
    cfg.fewshot_shots = get_or<std::size_t>(fewshot, "shots", cfg.fewshot_shots);

    for (const auto& d : doc.value("datasets", nlohmann::json::array())) {
        cfg.datasets.push_back(dataset_from(d, base));
    }
    std::set<std::string> names;
    for (const auto& e : doc.value("endpoints", nlohmann::json::array())) {
        cfg.endpoints.push_back(endpoint_from(e));
        if (!names.insert(cfg.endpoints.back().name).second) {
            throw ConfigError("duplicate endpoint alias '" + cfg.endpoints.back().name + "'");
        }
    }
    for (const auto& s : doc.value("setups", nlohmann::json::array())) {
        try {
            cfg.setups.push_back(labeling::ProblemSetup::make(
                corpus::dataset_id_from_string(get_or<std::string>(s, "dataset", "")),
                get_or<int>(s, "threshold", 3), get_or<int>(s, "classes", 5)));
        } catch (const InvalidSetup& err) {
            throw ConfigError(err.what());
        }
    }

    const auto tuner = doc.value("tuner", nlohmann::json::object());
    cfg.tuner.url = get_or<std::string>(tuner, "url", "");
    cfg.tuner.probe_base_model = get_or<std::string>(tuner, "probe_base_model", cfg.tuner.probe_base_model);
    cfg.tuner.finetune_base_model =
        get_or<std::string>(tuner, "finetune_base_model", cfg.tuner.finetune_base_model);
    cfg.tuner.timeout = get_or<double>(tuner, "timeout", cfg.tuner.timeout);
    cfg.tuner.hyper = tuner.value("hyper", nlohmann::json::object());

    const auto lex = doc.value("lexicon", nlohmann::json::object());
    auto lex_dir = get_or<std::string>(lex, "dir", "");
    cfg.lexicon.dir = lex_dir.empty() ? std::filesystem::path(MLLMSENT_DEFAULT_LEXICON_DIR)
                                      : resolve(base, lex_dir);
    auto& o = cfg.lexicon.options;
    o.alpha = get_or<double>(lex, "alpha", o.alpha);
    o.negation_scale = get_or<double>(lex, "negation_scale", o.negation_scale);
    o.positive_threshold = get_or<double>(lex, "positive_threshold", o.positive_threshold);
    o.negative_threshold = get_or<double>(lex, "negative_threshold", o.negative_threshold);
    return cfg;
}

const DatasetConfig& PipelineConfig::dataset(corpus::DatasetId id) const {
    for (const auto& d : datasets) {
        if (d.id == id) return d;
    }
    throw ConfigError("no dataset '" + std::string(corpus::to_string(id)) + "' in config");
}

bool PipelineConfig::has_endpoint(const std::string& name) const {
    for (const auto& e : endpoints) {
        if (e.name == name) return true;
    }
    return false;
}

const gateway::EndpointConfig& PipelineConfig::endpoint(const std::string& name) const {
    for (const auto& e : endpoints) {
        if (e.name == name) return e;
    }
    throw ConfigError("no endpoint '" + name + "' in config");
}

nlohmann::json resolved_json(const PipelineConfig& cfg) {
    nlohmann::json datasets = nlohmann::json::array();
    for (const auto& d : cfg.datasets) {
        datasets.push_back({{"id", corpus::to_string(d.id)},
                            {"path", d.path.string()},
                            {"images_root", d.images_root.string()}});
    }
    nlohmann::json endpoints = nlohmann::json::array();
    for (const auto& e : cfg.endpoints) {
        endpoints.push_back({{"name", e.name},
                             {"model", e.wire_model()},
                             {"base_url", e.base_url},
                             {"auth_env_var", e.auth_env_var},
                             {"gen_params", gateway::to_json(e.gen_params)},
                             {"request_timeout", e.request_timeout},
                             {"max_retries", e.max_retries},
                             {"max_concurrency", e.max_concurrency}});
    }
    nlohmann::json setups = nlohmann::json::array();
    for (const auto& s : cfg.setups) setups.push_back(labeling::to_json(s));
    return {{"seed", cfg.seed},
            {"folds", cfg.folds},
            {"metric", evalkit::to_string(cfg.metric)},
            {"out_dir", cfg.out_dir.string()},
            {"cache_path", cfg.cache_path.string()},
            {"fewshot_shots", cfg.fewshot_shots},
            {"datasets", datasets},
            {"endpoints", endpoints},
            {"setups", setups},
            {"tuner", {{"url", cfg.tuner.url},
                       {"probe_base_model", cfg.tuner.probe_base_model},
                       {"finetune_base_model", cfg.tuner.finetune_base_model},
                       {"hyper", cfg.tuner.hyper}}},
            {"lexicon", {{"dir", cfg.lexicon.dir.string()},
                         {"alpha", cfg.lexicon.options.alpha},
                         {"negation_scale", cfg.lexicon.options.negation_scale},
                         {"positive_threshold", cfg.lexicon.options.positive_threshold},
                         {"negative_threshold", cfg.lexicon.options.negative_threshold}}}};
}

}  // namespace mllmsent::config
