#include "mllmsent/chat_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "mllmsent/error.hpp"
#include "mllmsent/hashing.hpp"

namespace mllmsent::gateway {

namespace {

enum class Failure { none, retryable, rate_limited, auth, fatal };

struct Attempt {
    Failure failure = Failure::none;
    std::string message;
    double retry_after = 0.0;
    ChatResponse response;
};

std::string content_text(const nlohmann::json& content) {
    if (content.is_string()) return content.get<std::string>();
    std::string out;
    if (content.is_array()) {
        for (const auto& part : content) {
            if (part.value("type", "") == "text") out += part.value("text", "");
        }
    }
    return out;
}

void set_timeouts(httplib::Client& cli, double seconds) {
    auto whole = static_cast<time_t>(seconds);
    auto usec = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
    cli.set_connection_timeout(whole, usec);
    cli.set_read_timeout(whole, usec);
    cli.set_write_timeout(whole, usec);
}

template <typename Semaphore>
class SlotGuard {
public:
    explicit SlotGuard(Semaphore& s) : s_(s) { s_.acquire(); }
    ~SlotGuard() { s_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    Semaphore& s_;
};

}  // namespace

ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidEndpointConfig("base_url needs a scheme: '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.path = url.substr(path_start);
    }
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

ChatClient::ChatClient(EndpointConfig config, std::uint64_t jitter_seed, Sleeper sleeper)
    : config_(std::move(config)),
      url_(parse_url(config_.base_url)),
      sleep_(sleeper ? std::move(sleeper)
                     : Sleeper([](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); })),
      slots_(std::max(1, config_.max_concurrency)),
      rng_(jitter_seed) {
    config_.validate();
}

nlohmann::json ChatClient::build_body(const ChatRequest& request) const {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    if (request.image) {
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:" + request.image->mime_type + ";base64," +
                           base64_encode(request.image->bytes)}}}});
    }
    nlohmann::json body{{"model", config_.wire_model()},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
    const auto params = to_json(config_.gen_params);
    for (const auto& [key, value] : params.items()) body[key] = value;
    return body;
}

std::chrono::duration<double> ChatClient::backoff(int attempt, double retry_after) {
    double jitter;
    {
        std::lock_guard lock(rng_mutex_);
        jitter = 0.5 + 0.5 * std::generate_canonical<double, 53>(rng_);
    }
    double delay = std::min(config_.backoff_max, config_.backoff_base * std::ldexp(1.0, attempt));
    return std::chrono::duration<double>(std::max(delay * jitter, retry_after));
}

ChatResponse ChatClient::complete(const ChatRequest& request) {
    const std::string body = build_body(request).dump();
    httplib::Headers headers;
    if (!config_.auth_env_var.empty()) {
        const char* token = std::getenv(config_.auth_env_var.c_str());
        if (token == nullptr || *token == '\0') {
            throw AuthError("environment variable " + config_.auth_env_var + " is not set for " +
                            config_.name);
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    const std::string path = url_.path + "/chat/completions";

    auto send = [&]() {
        Attempt a;
        auto res = [&] {
            SlotGuard slot(slots_);
            ++attempts_;
            httplib::Client cli(url_.origin);
            set_timeouts(cli, config_.request_timeout);
            return cli.Post(path, headers, body, "application/json");
        }();

        if (!res) {
            a.failure = Failure::retryable;
            a.message = "request to " + config_.name + " failed: " + httplib::to_string(res.error());
            return a;
        }
        const int status = res->status;
        if (status == 401 || status == 403) {
            a.failure = Failure::auth;
            a.message = config_.name + " rejected credentials (HTTP " + std::to_string(status) + ")";
            return a;
        }
        if (status == 429 || status >= 500) {
            a.failure = status == 429 ? Failure::rate_limited : Failure::retryable;
            a.message = config_.name + " returned HTTP " + std::to_string(status);
            if (res->has_header("Retry-After")) {
                a.retry_after = std::atof(res->get_header_value("Retry-After").c_str());
            }
            return a;
        }
        if (status < 200 || status >= 300) {
            a.failure = Failure::fatal;
            a.message = config_.name + " returned HTTP " + std::to_string(status) + ": " +
                        res->body.substr(0, 200);
            return a;
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            a.failure = Failure::retryable;
            a.message = config_.name + " returned a malformed completion body";
            return a;
        }
        const auto& message = j["choices"][0].value("message", nlohmann::json::object());
        a.response.text = content_text(message.value("content", nlohmann::json{}));
        if (j.contains("usage") && j["usage"].is_object()) {
            const auto& u = j["usage"];
            a.response.usage = TokenUsage{u.value("prompt_tokens", 0LL),
                                          u.value("completion_tokens", 0LL),
                                          u.value("total_tokens", 0LL)};
        }
        return a;
    };

    for (int attempt = 0;; ++attempt) {
        Attempt a = send();
        switch (a.failure) {
            case Failure::none:
                a.response.retries = attempt;
                return a.response;
            case Failure::auth: throw AuthError(a.message);
            case Failure::fatal: throw TransportError(a.message);
            case Failure::retryable:
            case Failure::rate_limited:
                if (attempt < config_.max_retries) {
                    sleep_(backoff(attempt, a.retry_after));
                    continue;
                }
                if (a.failure == Failure::rate_limited) {
                    throw RateLimited(a.message + " after " + std::to_string(attempt) + " retries");
                }
                throw TransportError(a.message + " after " + std::to_string(attempt) + " retries");
        }
    }
}

}  // namespace mllmsent::gateway
