#include "mllmsent/endpoint.hpp"

#include <cmath>

#include "mllmsent/error.hpp"

namespace mllmsent::gateway {

void GenerationParams::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw InvalidEndpointConfig("temperature must be >= 0");
    }
    if (top_p && !(*top_p > 0.0 && *top_p <= 1.0)) {
        throw InvalidEndpointConfig("top_p must lie in (0, 1]");
    }
    if (num_beams && *num_beams < 1) throw InvalidEndpointConfig("num_beams must be >= 1");
    if (max_tokens && *max_tokens < 1) throw InvalidEndpointConfig("max_tokens must be >= 1");
    if (repetition_penalty && !(*repetition_penalty > 0.0)) {
        throw InvalidEndpointConfig("repetition_penalty must be > 0");
    }
}

GenerationParams GenerationParams::defaults_for(std::string_view alias) {
    GenerationParams p;
    if (alias == "minigpt4") {
        p.temperature = 0.1;
        p.num_beams = 1;
    } else if (alias == "gpt4omini") {
        p.temperature = 1.0;
        p.max_tokens = 300;
    } else if (alias.starts_with("deepseek")) {
        p.max_tokens = 512;
        p.repetition_penalty = 1.1;
        p.do_sample = true;
        p.temperature = 0.1;
        p.top_p = 0.9;
    }
    return p;
}

nlohmann::json to_json(const GenerationParams& p) {
    nlohmann::json j{{"temperature", p.temperature}};
    if (p.num_beams) j["num_beams"] = *p.num_beams;
    if (p.max_tokens) j["max_tokens"] = *p.max_tokens;
    if (p.repetition_penalty) j["repetition_penalty"] = *p.repetition_penalty;
    if (p.do_sample) j["do_sample"] = *p.do_sample;
    if (p.top_p) j["top_p"] = *p.top_p;
    return j;
}

namespace {

void merge_items(GenerationParams& base, const nlohmann::json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "temperature") base.temperature = value.get<double>();
        else if (key == "num_beams") base.num_beams = value.get<int>();
        else if (key == "max_tokens") base.max_tokens = value.get<int>();
        else if (key == "repetition_penalty") base.repetition_penalty = value.get<double>();
        else if (key == "do_sample") base.do_sample = value.get<bool>();
        else if (key == "top_p") base.top_p = value.get<double>();
        else throw InvalidEndpointConfig("unknown generation parameter '" + key + "'");
    }
}

}  // namespace

GenerationParams merge_params(GenerationParams base, const nlohmann::json& j) {
    if (j.is_null()) return base;
    if (!j.is_object()) throw InvalidEndpointConfig("gen_params must be a table");
    try {
        merge_items(base, j);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidEndpointConfig(std::string("bad generation parameter: ") + e.what());
    }
    base.validate();
    return base;
}

void EndpointConfig::validate() const {
    if (name.empty()) throw InvalidEndpointConfig("endpoint name is empty");
    if (base_url.empty()) throw InvalidEndpointConfig("endpoint '" + name + "' has no base_url");
    if (max_concurrency < 1) {
        throw InvalidEndpointConfig("endpoint '" + name + "': max_concurrency must be >= 1");
    }
    if (!(request_timeout > 0.0)) {
        throw InvalidEndpointConfig("endpoint '" + name + "': request_timeout must be > 0");
    }
    if (max_retries < 0) throw InvalidEndpointConfig("endpoint '" + name + "': max_retries < 0");
    if (backoff_base < 0.0 || backoff_max < 0.0) {
        throw InvalidEndpointConfig("endpoint '" + name + "': negative backoff");
    }
    gen_params.validate();
}

}  // namespace mllmsent::gateway
