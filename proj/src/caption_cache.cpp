#include "mllmsent/caption_cache.hpp"

#include <chrono>
#include <ctime>

#include "mllmsent/error.hpp"

namespace mllmsent::gateway {

nlohmann::json to_json(const CaptionRecord& r) {
    nlohmann::json j{{"image_id", r.image_id},
                     {"model_name", r.model_name},
                     {"prompt_fingerprint", r.prompt_fingerprint},
                     {"caption_text", r.caption_text},
                     {"created_at", r.created_at}};
    if (r.token_usage) {
        j["token_usage"] = {{"prompt_tokens", r.token_usage->prompt_tokens},
                            {"completion_tokens", r.token_usage->completion_tokens},
                            {"total_tokens", r.token_usage->total_tokens}};
    }
    return j;
}

CaptionRecord caption_from_json(const nlohmann::json& j) {
    CaptionRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.model_name = j.at("model_name").get<std::string>();
    r.prompt_fingerprint = j.at("prompt_fingerprint").get<std::string>();
    r.caption_text = j.at("caption_text").get<std::string>();
    r.created_at = j.value("created_at", std::string{});
    if (j.contains("token_usage") && j["token_usage"].is_object()) {
        const auto& u = j["token_usage"];
        r.token_usage = TokenUsage{u.value("prompt_tokens", 0LL), u.value("completion_tokens", 0LL),
                                   u.value("total_tokens", 0LL)};
    }
    return r;
}

CaptionCache::CaptionCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty()) return;
    if (std::filesystem::exists(path_)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw IoError("cannot read caption cache " + path_.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                ++skipped_;
                continue;
            }
            try {
                auto r = caption_from_json(j);
                records_[{r.image_id, r.model_name, r.prompt_fingerprint}] = std::move(r);
            } catch (const nlohmann::json::exception&) {
                ++skipped_;
            }
        }
    } else if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open caption cache " + path_.string() + " for append");
}

std::optional<CaptionRecord> CaptionCache::find(const std::string& image_id,
                                                const std::string& model,
                                                const std::string& fingerprint) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find({image_id, model, fingerprint});
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void CaptionCache::put(const CaptionRecord& record) {
    if (record.caption_text.empty()) throw EmptyCaption("refusing to cache an empty caption");
    std::lock_guard lock(mutex_);
    if (out_.is_open()) {
        out_ << to_json(record).dump() << '\n';
        out_.flush();
        if (!out_) throw IoError("append to caption cache " + path_.string() + " failed");
    }
    records_[{record.image_id, record.model_name, record.prompt_fingerprint}] = record;
}

std::size_t CaptionCache::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace mllmsent::gateway
