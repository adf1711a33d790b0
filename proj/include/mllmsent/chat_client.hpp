#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "mllmsent/endpoint.hpp"

namespace mllmsent::gateway {

struct ImagePayload {
    std::string mime_type = "image/jpeg";
    std::string bytes;
};

struct TokenUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long total_tokens = 0;
};

struct ChatRequest {
    std::string prompt;
    std::optional<ImagePayload> image;
};

struct ChatResponse {
    std::string text;
    int retries = 0;
    std::optional<TokenUsage> usage;
};

/// Splits "https://host:port/prefix" into the origin and the path prefix.
struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // never ends with '/'
};
ParsedUrl parse_url(const std::string& url);

/// OpenAI-style chat-completions client for one endpoint.
///
/// At most `max_concurrency` requests are in flight at any time, however many
/// threads share the client. Transport failures, 5xx and 429 responses are
/// retried with exponential backoff and jitter; 401/403 fail immediately.
class ChatClient {
public:
    using Sleeper = std::function<void(std::chrono::duration<double>)>;

    explicit ChatClient(EndpointConfig config, std::uint64_t jitter_seed = 0x6d6c6c6dULL,
                        Sleeper sleeper = {});

    ChatClient(const ChatClient&) = delete;
    ChatClient& operator=(const ChatClient&) = delete;

    ChatResponse complete(const ChatRequest& request);

    /// Request body as sent on the wire.
    nlohmann::json build_body(const ChatRequest& request) const;

    const EndpointConfig& config() const noexcept { return config_; }
    std::uint64_t attempts() const noexcept { return attempts_.load(); }

private:
    std::chrono::duration<double> backoff(int attempt, double retry_after);

    EndpointConfig config_;
    ParsedUrl url_;
    Sleeper sleep_;
    std::counting_semaphore<1 << 20> slots_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
    std::atomic<std::uint64_t> attempts_{0};
};

}  // namespace mllmsent::gateway
