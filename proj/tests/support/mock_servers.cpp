#include "mock_servers.hpp"

#include <fstream>
#include <stdexcept>

#include "mllmsent/hashing.hpp"

namespace mllmsent::testing {

namespace {

void start(httplib::Server& server, std::thread& thread, int& port) {
    port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) throw std::runtime_error("mock server could not bind");
    thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
}

void stop(httplib::Server& server, std::thread& thread) {
    server.stop();
    if (thread.joinable()) thread.join();
}

void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

}  // namespace

MockChatServer::MockChatServer() {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    start(server_, thread_, port_);
}

MockChatServer::~MockChatServer() { stop(server_, thread_); }

std::string MockChatServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

void MockChatServer::script(std::vector<ScriptedReply> replies) {
    std::lock_guard lock(mutex_);
    script_.assign(replies.begin(), replies.end());
}

void MockChatServer::set_default_text(std::string text) {
    std::lock_guard lock(mutex_);
    default_text_ = std::move(text);
}

void MockChatServer::set_reply_for_image(const std::string& sha256, std::string text) {
    std::lock_guard lock(mutex_);
    by_image_[sha256] = std::move(text);
}

void MockChatServer::fail_image(const std::string& sha256, int status) {
    std::lock_guard lock(mutex_);
    failing_images_[sha256] = status;
}

void MockChatServer::set_text_handler(std::function<std::string(const std::string&)> handler) {
    std::lock_guard lock(mutex_);
    text_handler_ = std::move(handler);
}

void MockChatServer::set_delay(std::chrono::milliseconds delay) {
    std::lock_guard lock(mutex_);
    delay_ = delay;
}

void MockChatServer::load_fixture(const nlohmann::json& f) {
    if (f.contains("default_text")) set_default_text(f["default_text"].get<std::string>());
    std::vector<ScriptedReply> replies;
    for (const auto& r : f.value("script", nlohmann::json::array())) {
        ScriptedReply s;
        s.status = r.value("status", 200);
        s.text = r.value("text", std::string());
        if (r.contains("body")) s.body = r["body"].get<std::string>();
        if (r.contains("retry_after")) s.retry_after = r["retry_after"].get<double>();
        replies.push_back(std::move(s));
    }
    script(std::move(replies));
    const auto replies_by_image = f.value("by_image_sha256", nlohmann::json::object());
    for (const auto& [sha, text] : replies_by_image.items()) {
        set_reply_for_image(sha, text.get<std::string>());
    }
    const auto failures = f.value("fail_image_sha256", nlohmann::json::object());
    for (const auto& [sha, status] : failures.items()) {
        fail_image(sha, status.get<int>());
    }
}

void MockChatServer::load_fixture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mock fixture not found: " + path.string());
    load_fixture(nlohmann::json::parse(in));
}

std::vector<nlohmann::json> MockChatServer::bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
}

void MockChatServer::reset_counters() {
    std::lock_guard lock(mutex_);
    requests_ = 0;
    max_in_flight_ = 0;
    bodies_.clear();
}

std::string MockChatServer::completion_body(const std::string& text) {
    return nlohmann::json{{"id", "mock-completion"},
                          {"object", "chat.completion"},
                          {"choices", {{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", text}}},
                                        {"finish_reason", "stop"}}}},
                          {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 5}, {"total_tokens", 15}}}}
        .dump();
}

void MockChatServer::handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    auto now = ++in_flight_;
    auto prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }

    auto body = nlohmann::json::parse(req.body, nullptr, false);
    std::string prompt;
    std::string image_sha;
    if (!body.is_discarded()) {
        for (const auto& part : body["messages"][0]["content"]) {
            if (part.value("type", "") == "text") prompt += part.value("text", "");
            if (part.value("type", "") == "image_url") {
                auto url = part["image_url"].value("url", "");
                auto comma = url.find(',');
                if (comma != std::string::npos) image_sha = sha256_hex(base64_decode(url.substr(comma + 1)));
            }
        }
    }

    std::optional<ScriptedReply> reply;
    std::chrono::milliseconds delay;
    std::function<std::string(const std::string&)> handler;
    {
        std::lock_guard lock(mutex_);
        bodies_.push_back(body);
        delay = delay_;
        if (!script_.empty()) {
            reply = script_.front();
            script_.pop_front();
        } else if (auto f = failing_images_.find(image_sha); f != failing_images_.end()) {
            reply = ScriptedReply{f->second, "", std::nullopt, std::nullopt};
        } else if (auto it = by_image_.find(image_sha); it != by_image_.end()) {
            reply = ScriptedReply{200, it->second, std::nullopt, std::nullopt};
        } else if (text_handler_) {
            handler = text_handler_;
        } else {
            reply = ScriptedReply{200, default_text_, std::nullopt, std::nullopt};
        }
    }
    if (!reply) reply = ScriptedReply{200, handler(prompt), std::nullopt, std::nullopt};
    if (delay.count() > 0) std::this_thread::sleep_for(delay);

    res.status = reply->status;
    if (reply->retry_after) res.set_header("Retry-After", std::to_string(*reply->retry_after));
    if (reply->body) {
        res.set_content(*reply->body, "application/json");
    } else if (reply->status >= 200 && reply->status < 300) {
        res.set_content(completion_body(reply->text), "application/json");
    } else {
        res.set_content(nlohmann::json{{"error", {{"message", "scripted failure"}}}}.dump(), "application/json");
    }
    --in_flight_;
}

MockTunerServer::MockTunerServer() {
    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        ++requests_;
        send_json(res, 200, {{"status", "ok"}});
    });
    server_.Post("/train", [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("samples")) {
            send_json(res, 400, {{"error", "malformed train request"}});
            return;
        }
        std::lock_guard lock(mutex_);
        train_requests_.push_back(body);
        Model m;
        m.classes = body["setup"].value("classes", 2);
        for (const auto& s : body["samples"]) m.seen[s["text"].get<std::string>()] = s["class_id"].get<int>();
        auto id = "model-" + std::to_string(next_id_++);
        models_[id] = std::move(m);
        send_json(res, 200, {{"model_id", id},
                             {"mode", body.value("mode", "finetune")},
                             {"setup", body["setup"]},
                             {"metrics", {{"best_val_f1", 1.0}, {"epochs_run", 3}, {"stopped_early", true}}}});
    });
    server_.Post(R"(/models/([^/]+)/predict)", [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        std::lock_guard lock(mutex_);
        auto it = models_.find(req.matches[1]);
        if (it == models_.end()) {
            send_json(res, 404, {{"error", "UnknownModel"}});
            return;
        }
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        nlohmann::json preds = nlohmann::json::array();
        for (const auto& t : body["texts"]) {
            auto text = t.get<std::string>();
            int cls = fallback_;
            if (auto o = oracle_.find(text); o != oracle_.end()) {
                cls = o->second;
            } else if (auto s = it->second.seen.find(text); s != it->second.seen.end()) {
                cls = s->second;
            }
            std::vector<double> scores(static_cast<std::size_t>(it->second.classes), 0.0);
            if (cls >= 0 && cls < it->second.classes) scores[static_cast<std::size_t>(cls)] = 1.0;
            preds.push_back({{"class_id", cls}, {"scores", scores}});
        }
        send_json(res, 200, {{"predictions", preds}});
    });
    server_.Delete(R"(/models/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        std::lock_guard lock(mutex_);
        if (models_.erase(req.matches[1]) == 0) {
            send_json(res, 404, {{"error", "UnknownModel"}});
            return;
        }
        send_json(res, 200, {{"deleted", std::string(req.matches[1])}});
    });
    start(server_, thread_, port_);
}

MockTunerServer::~MockTunerServer() { stop(server_, thread_); }

std::string MockTunerServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void MockTunerServer::set_oracle(std::map<std::string, int> oracle) {
    std::lock_guard lock(mutex_);
    oracle_ = std::move(oracle);
}

void MockTunerServer::set_fallback_class(int id) {
    std::lock_guard lock(mutex_);
    fallback_ = id;
}

std::vector<nlohmann::json> MockTunerServer::train_requests() const {
    std::lock_guard lock(mutex_);
    return train_requests_;
}

std::size_t MockTunerServer::live_models() const {
    std::lock_guard lock(mutex_);
    return models_.size();
}

}  // namespace mllmsent::testing
