#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mllmsent/labeling.hpp"

namespace mllmsent::gateway {

struct LabelSpan {
    std::size_t begin = 0;  // byte offsets into raw_text
    std::size_t end = 0;
    std::size_t label_index = 0;
};

struct LabelParse {
    enum class Outcome { label, ambiguous, unparseable };

    Outcome outcome = Outcome::unparseable;
    std::size_t label_index = 0;  // meaningful only for Outcome::label
    std::string raw_text;
    std::vector<LabelSpan> matched_spans;

    bool is_label() const noexcept { return outcome == Outcome::label; }
};

std::string_view to_string(LabelParse::Outcome o);

/// Finds setup label names in free text, case-insensitively and on word
/// boundaries. Longer labels win at the same position, so "slightly positive"
/// is never read as "positive". One distinct label is a label, several are
/// ambiguous, none is unparseable.
LabelParse parse_label(std::string_view text, const labeling::ProblemSetup& setup);

/// Reply parser for text classifiers prompted with the class-id mapping:
/// label names first, then bare class ids.
LabelParse parse_class_reply(std::string_view text, const labeling::ProblemSetup& setup);

}  // namespace mllmsent::gateway
