#include "mllmsent/captioning.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mllmsent/error.hpp"
#include "mllmsent/prompts.hpp"

namespace mllmsent::gateway {

namespace {

std::string mime_for(const std::string& uri) {
    auto dot = uri.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : uri.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == "png") return "image/png";
    if (ext == "gif") return "image/gif";
    if (ext == "webp") return "image/webp";
    if (ext == "bmp") return "image/bmp";
    return "image/jpeg";
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

ImagePayload load_image(const std::string& uri, const std::filesystem::path& base_dir) {
    ImagePayload image;
    image.mime_type = mime_for(uri);
    if (uri.starts_with("http://") || uri.starts_with("https://")) {
        auto url = parse_url(uri);
        httplib::Client cli(url.origin);
        cli.set_follow_location(true);
        auto res = cli.Get(url.path.empty() ? "/" : url.path);
        if (!res) throw TransportError("fetching " + uri + " failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw TransportError("fetching " + uri + " returned HTTP " + std::to_string(res->status));
        }
        if (auto ct = res->get_header_value("Content-Type"); ct.starts_with("image/")) {
            image.mime_type = ct.substr(0, ct.find(';'));
        }
        image.bytes = std::move(res->body);
    } else {
        std::filesystem::path p(uri);
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p, std::ios::binary);
        if (!in) throw MissingFile("image not found: " + p.string());
        image.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    if (image.bytes.empty()) throw MissingFile("image is empty: " + uri);
    return image;
}

LabelParse classify_image(ChatClient& client, const ImagePayload& image,
                          const labeling::ProblemSetup& setup) {
    if (image.bytes.empty()) throw std::invalid_argument("classify_image: empty image");
    auto reply = client.complete({build_task1_prompt(setup), image});
    return parse_label(reply.text, setup);
}

std::string caption_fingerprint(const EndpointConfig& endpoint) {
    return prompt_fingerprint(build_caption_prompt(), endpoint.gen_params);
}

CaptionOutcome caption_image(ChatClient& client, const std::string& image_id,
                             const std::function<ImagePayload()>& load, CaptionCache& cache) {
    const auto& ep = client.config();
    const auto fingerprint = caption_fingerprint(ep);
    if (auto hit = cache.find(image_id, ep.name, fingerprint)) {
        return {std::move(*hit), true, 0};
    }
    auto image = load();
    if (image.bytes.empty()) throw std::invalid_argument("caption_image: empty image");
    auto reply = client.complete({build_caption_prompt(), std::move(image)});
    if (is_blank(reply.text)) {
        throw EmptyCaption(ep.name + " returned an empty caption for " + image_id);
    }
    CaptionRecord record{image_id,   ep.name,          fingerprint, reply.text,
                         utc_timestamp(), reply.usage};
    cache.put(record);
    return {std::move(record), false, reply.retries};
}

void run_bounded(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex error_mutex;
    auto loop = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first) first = std::current_exception();
                next = n;
            }
        }
    };
    if (workers == 1) {
        loop();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
    }
    if (first) std::rethrow_exception(first);
}

}  // namespace mllmsent::gateway
