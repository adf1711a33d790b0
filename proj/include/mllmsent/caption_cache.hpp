#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mllmsent/chat_client.hpp"

namespace mllmsent::gateway {

struct CaptionRecord {
    std::string image_id;
    std::string model_name;
    std::string prompt_fingerprint;
    std::string caption_text;
    std::string created_at;  // ISO-8601 UTC
    std::optional<TokenUsage> token_usage;
};

nlohmann::json to_json(const CaptionRecord& r);
CaptionRecord caption_from_json(const nlohmann::json& j);

/// Append-only JSON Lines store of captions keyed by
/// (image_id, model_name, prompt_fingerprint). Later lines win on reload.
/// Appends are serialized; lookups may run concurrently with them.
class CaptionCache {
public:
    /// Loads `path` if it exists. An empty path keeps the cache in memory.
    explicit CaptionCache(std::filesystem::path path = {});

    CaptionCache(const CaptionCache&) = delete;
    CaptionCache& operator=(const CaptionCache&) = delete;

    std::optional<CaptionRecord> find(const std::string& image_id, const std::string& model,
                                      const std::string& fingerprint) const;
    void put(const CaptionRecord& record);

    std::size_t size() const;
    /// Lines that failed to parse on load (typically a torn final write).
    std::size_t skipped_lines() const noexcept { return skipped_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    using Key = std::tuple<std::string, std::string, std::string>;

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<Key, CaptionRecord> records_;
    std::ofstream out_;
    std::size_t skipped_ = 0;
};

std::string utc_timestamp();

}  // namespace mllmsent::gateway
