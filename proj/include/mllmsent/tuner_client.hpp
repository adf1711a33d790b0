#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mllmsent/labeling.hpp"

namespace mllmsent::tuner {

enum class Mode { probe, finetune };
std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct HyperParams {
    double learning_rate = 2e-3;
    double weight_decay = 0.01;
    int max_epochs = 100;
    int patience = 25;
    int batch_size = 16;
    std::uint64_t seed = 42;
    bool class_weighting = true;

    static HyperParams defaults_for(Mode m);
    void validate() const;
};

nlohmann::json to_json(const HyperParams& h);
/// Overlays the keys present in `j`; unknown keys throw ConfigError.
HyperParams merge_hyper(HyperParams base, const nlohmann::json& j);

/// Caption text with its wire-side class id.
struct Sample {
    std::string text;
    int class_id = 0;
};

struct TrainRequest {
    Mode mode = Mode::probe;
    std::string base_model;
    labeling::ProblemSetup setup;
    std::vector<Sample> samples;
    HyperParams hyper;
};

nlohmann::json to_json(const TrainRequest& r);

struct TrainingMetrics {
    double best_val_f1 = 0.0;
    int epochs_run = 0;
    bool stopped_early = false;
};

struct ModelHandle {
    std::string model_id;
    Mode mode = Mode::probe;
    std::optional<labeling::ProblemSetup> setup;
    TrainingMetrics metrics;
};

ModelHandle handle_from_json(const nlohmann::json& j);

struct Prediction {
    int class_id = 0;
    std::vector<double> scores;
};

/// Client for the training worker's HTTP JSON protocol:
/// POST /train, POST /models/{id}/predict, DELETE /models/{id}, GET /healthz.
class TunerClient {
public:
    explicit TunerClient(std::string base_url, double timeout_seconds = 3600.0);

    bool healthy() const;
    ModelHandle train(const TrainRequest& request) const;
    std::vector<Prediction> predict(const std::string& model_id,
                                    const std::vector<std::string>& texts) const;
    void remove(const std::string& model_id) const;

private:
    nlohmann::json call(const std::string& method, const std::string& path,
                        const nlohmann::json* body) const;

    std::string origin_;
    std::string prefix_;
    double timeout_;
};

}  // namespace mllmsent::tuner
