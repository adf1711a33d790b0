#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace mllmsent::gateway {

struct GenerationParams {
    double temperature = 1.0;
    std::optional<int> num_beams;
    std::optional<int> max_tokens;
    std::optional<double> repetition_penalty;
    std::optional<bool> do_sample;
    std::optional<double> top_p;

    void validate() const;

    /// Per-alias generation defaults:
    ///   minigpt4   temperature 0.1, 1 beam
    ///   gpt4omini  temperature 1.0, 300 tokens
    ///   deepseek*  512 tokens, repetition penalty 1.1, sampling, temperature 0.1, top_p 0.9
    /// Any other alias gets temperature 1.0 and nothing else.
    static GenerationParams defaults_for(std::string_view alias);

    friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

/// Only the fields that are set appear; keys sort alphabetically so the dump
/// is byte-stable.
nlohmann::json to_json(const GenerationParams& p);
/// Overlays the keys present in `j` onto `base`.
GenerationParams merge_params(GenerationParams base, const nlohmann::json& j);

struct EndpointConfig {
    std::string name;        // alias used in cache keys and reports
    std::string model;       // wire model id; defaults to name
    std::string base_url;    // e.g. https://api.openai.com/v1
    std::string auth_env_var;
    GenerationParams gen_params;
    double request_timeout = 60.0;  // seconds
    int max_retries = 3;
    int max_concurrency = 1;
    double backoff_base = 0.5;  // seconds, doubled per attempt
    double backoff_max = 30.0;

    void validate() const;
    const std::string& wire_model() const { return model.empty() ? name : model; }
};

}  // namespace mllmsent::gateway
