#include "mllmsent/prompts.hpp"

#include <cctype>

#include "mllmsent/error.hpp"
#include "mllmsent/hashing.hpp"

namespace mllmsent::gateway {

namespace {

std::string single_line(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

}  // namespace

std::string build_task1_prompt(const labeling::ProblemSetup& setup) {
    std::string labels;
    for (const auto& l : setup.labels) {
        if (!labels.empty()) labels += ", ";
        labels += l;
    }
    return "Analyze this image, and classify it as {" + labels +
           "} sentiments, do not describe the image, and select only one class.";
}

std::string build_caption_prompt() { return "Describe this image in details."; }

std::string display_label(const std::string& label) {
    std::string out = label;
    bool start = true;
    for (auto& c : out) {
        if (start && std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        }
        start = c == ' ';
    }
    return out;
}

std::string render_class_mapping(const labeling::ProblemSetup& setup) {
    const auto n = setup.labels.size();
    std::vector<std::size_t> order{0, n - 1};
    for (std::size_t i = 1; i + 1 < n; ++i) order.push_back(i);

    std::string out = "{";
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k) out += ", ";
        out += "\"" + display_label(setup.labels[order[k]]) + "\": " +
               std::to_string(labeling::class_id(order[k], setup.classes));
    }
    return out + "}";
}

std::string sentiment_question(const labeling::ProblemSetup& setup) {
    return "What is the sentiment of this description? Please choose an answer from " +
           render_class_mapping(setup);
}

std::string build_fewshot_prompt(const labeling::ProblemSetup& setup,
                                 const std::vector<FewShotExample>& shots,
                                 const std::string& query_caption) {
    if (shots.size() < kMinShots || shots.size() > kMaxShots) {
        throw ShotCountOutOfRange("few-shot prompts take " + std::to_string(kMinShots) + " to " +
                                  std::to_string(kMaxShots) + " examples, got " +
                                  std::to_string(shots.size()));
    }
    std::string prompt;
    for (const auto& shot : shots) {
        if (shot.label_index >= setup.labels.size()) {
            throw ShotLabelOutsideSetup("shot label index " + std::to_string(shot.label_index) +
                                        " outside " + setup.name());
        }
        prompt += "Description: " + single_line(shot.caption) + "\n";
        prompt += "Answer: " +
                  std::to_string(labeling::class_id(shot.label_index, setup.classes)) + "\n\n";
    }
    prompt += "Description: " + single_line(query_caption) + "\n";
    prompt += sentiment_question(setup) + "\n";
    prompt += "Answer:";
    return prompt;
}

std::string prompt_fingerprint(const std::string& prompt, const GenerationParams& params) {
    return sha256_hex(prompt + '\n' + to_json(params).dump());
}

}  // namespace mllmsent::gateway
