#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>

#include "mllmsent/caption_cache.hpp"
#include "mllmsent/chat_client.hpp"
#include "mllmsent/label_parse.hpp"
#include "mllmsent/labeling.hpp"

namespace mllmsent::gateway {

/// Reads an image from a local path (relative paths resolve against
/// `base_dir`) or fetches it over http(s).
ImagePayload load_image(const std::string& uri, const std::filesystem::path& base_dir);

/// Task-1 request: direct classification of the image. Model text that names
/// no label or several labels comes back as an outcome, not an error.
LabelParse classify_image(ChatClient& client, const ImagePayload& image,
                          const labeling::ProblemSetup& setup);

struct CaptionOutcome {
    CaptionRecord record;
    bool cache_hit = false;
    int retries = 0;
};

/// Caption for one image, served from `cache` when the same model and
/// fingerprint were seen before. `load` runs only on a miss.
CaptionOutcome caption_image(ChatClient& client, const std::string& image_id,
                             const std::function<ImagePayload()>& load, CaptionCache& cache);

std::string caption_fingerprint(const EndpointConfig& endpoint);

/// Runs task(i) for i in [0, n) on up to `workers` threads. The first
/// exception escaping a task is rethrown after all workers stop.
void run_bounded(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

}  // namespace mllmsent::gateway
