#include "mllmsent/tuner_client.hpp"

#include <httplib.h>

#include "mllmsent/chat_client.hpp"
#include "mllmsent/error.hpp"

namespace mllmsent::tuner {

std::string_view to_string(Mode m) { return m == Mode::probe ? "probe" : "finetune"; }

Mode mode_from_string(std::string_view s) {
    if (s == "probe") return Mode::probe;
    if (s == "finetune") return Mode::finetune;
    throw TunerError("unknown training mode '" + std::string(s) + "'");
}

HyperParams HyperParams::defaults_for(Mode m) {
    HyperParams h;
    h.learning_rate = m == Mode::probe ? 2e-3 : 2e-5;
    return h;
}

void HyperParams::validate() const {
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0) || max_epochs <= 0 || patience <= 0 ||
        batch_size <= 0) {
        throw ConfigError("tuner hyperparameters must be positive");
    }
    if (patience > max_epochs) throw ConfigError("tuner patience exceeds max_epochs");
}

nlohmann::json to_json(const HyperParams& h) {
    return {{"learning_rate", h.learning_rate}, {"weight_decay", h.weight_decay},
            {"max_epochs", h.max_epochs},       {"patience", h.patience},
            {"batch_size", h.batch_size},       {"seed", h.seed},
            {"class_weighting", h.class_weighting}};
}

HyperParams merge_hyper(HyperParams h, const nlohmann::json& j) {
    if (j.is_null()) return h;
    if (!j.is_object()) throw ConfigError("tuner.hyper must be a table");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "learning_rate") h.learning_rate = value.get<double>();
            else if (key == "weight_decay") h.weight_decay = value.get<double>();
            else if (key == "max_epochs") h.max_epochs = value.get<int>();
            else if (key == "patience") h.patience = value.get<int>();
            else if (key == "batch_size") h.batch_size = value.get<int>();
            else if (key == "seed") h.seed = value.get<std::uint64_t>();
            else if (key == "class_weighting") h.class_weighting = value.get<bool>();
            else throw ConfigError("unknown tuner hyperparameter '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad tuner hyperparameter: ") + e.what());
    }
    h.validate();
    return h;
}

nlohmann::json to_json(const TrainRequest& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : r.samples) samples.push_back({{"text", s.text}, {"class_id", s.class_id}});
    return {{"mode", to_string(r.mode)},
            {"base_model", r.base_model},
            {"setup", labeling::to_json(r.setup)},
            {"samples", samples},
            {"hyper", to_json(r.hyper)}};
}

ModelHandle handle_from_json(const nlohmann::json& j) {
    try {
        ModelHandle h;
        h.model_id = j.at("model_id").get<std::string>();
        h.mode = mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("setup") && j["setup"].is_object()) h.setup = labeling::setup_from_json(j["setup"]);
        const auto m = j.value("metrics", nlohmann::json::object());
        h.metrics.best_val_f1 = m.value("best_val_f1", 0.0);
        h.metrics.epochs_run = m.value("epochs_run", 0);
        h.metrics.stopped_early = m.value("stopped_early", false);
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw TunerError(std::string("malformed model handle: ") + e.what());
    }
}

TunerClient::TunerClient(std::string base_url, double timeout_seconds) : timeout_(timeout_seconds) {
    if (base_url.empty()) throw TunerUnavailable("no tuner URL configured");
    try {
        auto parsed = gateway::parse_url(base_url);
        origin_ = parsed.origin;
        prefix_ = parsed.path;
    } catch (const InvalidEndpointConfig& e) {
        throw TunerUnavailable(e.what());
    }
}

nlohmann::json TunerClient::call(const std::string& method, const std::string& path,
                                 const nlohmann::json* body) const {
    httplib::Client cli(origin_);
    auto whole = static_cast<time_t>(timeout_);
    auto usec = static_cast<time_t>((timeout_ - static_cast<double>(whole)) * 1e6);
    cli.set_connection_timeout(whole < 10 ? whole : 10, whole < 10 ? usec : 0);
    cli.set_read_timeout(whole, usec);
    cli.set_write_timeout(whole, usec);

    const auto url = prefix_ + path;
    httplib::Result res{nullptr, httplib::Error::Unknown};
    if (method == "GET") {
        res = cli.Get(url);
    } else if (method == "DELETE") {
        res = cli.Delete(url);
    } else {
        res = cli.Post(url, body ? body->dump() : "{}", "application/json");
    }
    if (!res) {
        throw TunerUnavailable("tuner at " + origin_ + " unreachable: " + httplib::to_string(res.error()));
    }

    nlohmann::json payload;
    if (!res->body.empty()) {
        payload = nlohmann::json::parse(res->body, nullptr, false);
        if (payload.is_discarded()) {
            throw TunerError(method + " " + path + ": malformed JSON (status " +
                             std::to_string(res->status) + ")");
        }
    }
    if (res->status == 404) {
        std::string detail = payload.is_object() ? payload.value("error", std::string()) : "";
        throw UnknownModel(method + " " + path + ": " + (detail.empty() ? "not found" : detail));
    }
    if (res->status < 200 || res->status >= 300) {
        std::string detail = payload.is_object() ? payload.value("error", std::string()) : "";
        throw TunerError(method + " " + path + ": status " + std::to_string(res->status) +
                         (detail.empty() ? "" : " " + detail));
    }
    return payload;
}

bool TunerClient::healthy() const {
    try {
        call("GET", "/healthz", nullptr);
        return true;
    } catch (const Error&) {
        return false;
    }
}

ModelHandle TunerClient::train(const TrainRequest& request) const {
    auto body = to_json(request);
    return handle_from_json(call("POST", "/train", &body));
}

std::vector<Prediction> TunerClient::predict(const std::string& model_id,
                                             const std::vector<std::string>& texts) const {
    nlohmann::json body = {{"texts", texts}};
    auto reply = call("POST", "/models/" + model_id + "/predict", &body);
    std::vector<Prediction> out;
    try {
        for (const auto& p : reply.at("predictions")) {
            Prediction pred;
            pred.class_id = p.at("class_id").get<int>();
            pred.scores = p.value("scores", std::vector<double>{});
            out.push_back(std::move(pred));
        }
    } catch (const nlohmann::json::exception& e) {
        throw TunerError(std::string("malformed predictions: ") + e.what());
    }
    if (out.size() != texts.size()) {
        throw TunerError("tuner returned " + std::to_string(out.size()) + " predictions for " +
                         std::to_string(texts.size()) + " texts");
    }
    return out;
}

void TunerClient::remove(const std::string& model_id) const { call("DELETE", "/models/" + model_id, nullptr); }

}  // namespace mllmsent::tuner
