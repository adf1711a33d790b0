#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mllmsent/endpoint.hpp"
#include "mllmsent/labeling.hpp"

namespace mllmsent::gateway {

/// Direct image classification prompt with the setup's labels in braces.
std::string build_task1_prompt(const labeling::ProblemSetup& setup);

/// Scene-description prompt used for every captioning model.
std::string build_caption_prompt();

struct FewShotExample {
    std::string caption;
    std::size_t label_index = 0;
};

inline constexpr std::size_t kMinShots = 5;
inline constexpr std::size_t kMaxShots = 15;
inline constexpr std::size_t kDefaultShots = 15;

/// `{"Positive": 2, "Negative": 0, "Neutral": 1}` style mapping from display
/// label to wire class id. The two poles come first, then the remaining
/// classes from most to least positive.
std::string render_class_mapping(const labeling::ProblemSetup& setup);

/// Title-cased label ("Slightly Positive").
std::string display_label(const std::string& label);

std::string sentiment_question(const labeling::ProblemSetup& setup);

/// In-context classification prompt: every shot as description -> class id,
/// then the question for `query_caption`.
std::string build_fewshot_prompt(const labeling::ProblemSetup& setup,
                                 const std::vector<FewShotExample>& shots,
                                 const std::string& query_caption);

/// Hash over the exact prompt bytes and the generation parameters.
std::string prompt_fingerprint(const std::string& prompt, const GenerationParams& params);

}  // namespace mllmsent::gateway
