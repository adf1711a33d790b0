#include "mllmsent/label_parse.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace mllmsent::gateway {

namespace {

struct Word {
    std::size_t begin;
    std::size_t end;
    std::string text;  // lowercase
};

std::vector<Word> words_of(std::string_view text) {
    std::vector<Word> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        Word w{i, i, {}};
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
            w.text += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
            ++i;
        }
        w.end = i;
        out.push_back(std::move(w));
    }
    return out;
}

LabelParse finish(LabelParse p) {
    std::set<std::size_t> distinct;
    for (const auto& s : p.matched_spans) distinct.insert(s.label_index);
    if (distinct.empty()) {
        p.outcome = LabelParse::Outcome::unparseable;
    } else if (distinct.size() == 1) {
        p.outcome = LabelParse::Outcome::label;
        p.label_index = *distinct.begin();
    } else {
        p.outcome = LabelParse::Outcome::ambiguous;
    }
    return p;
}

}  // namespace

std::string_view to_string(LabelParse::Outcome o) {
    switch (o) {
        case LabelParse::Outcome::label: return "label";
        case LabelParse::Outcome::ambiguous: return "ambiguous";
        case LabelParse::Outcome::unparseable: return "unparseable";
    }
    return "unparseable";
}

LabelParse parse_label(std::string_view text, const labeling::ProblemSetup& setup) {
    struct Pattern {
        std::vector<std::string> words;
        std::size_t label;
    };
    std::vector<Pattern> patterns;
    for (std::size_t i = 0; i < setup.labels.size(); ++i) {
        Pattern p{{}, i};
        for (auto& w : words_of(setup.labels[i])) p.words.push_back(std::move(w.text));
        if (!p.words.empty()) patterns.push_back(std::move(p));
    }
    std::stable_sort(patterns.begin(), patterns.end(), [](const Pattern& a, const Pattern& b) {
        return a.words.size() > b.words.size();
    });

    LabelParse result;
    result.raw_text = std::string(text);
    const auto words = words_of(text);
    std::size_t i = 0;
    while (i < words.size()) {
        bool matched = false;
        for (const auto& p : patterns) {
            if (i + p.words.size() > words.size()) continue;
            bool eq = true;
            for (std::size_t k = 0; k < p.words.size() && eq; ++k) {
                eq = words[i + k].text == p.words[k];
            }
            if (!eq) continue;
            result.matched_spans.push_back(
                {words[i].begin, words[i + p.words.size() - 1].end, p.label});
            i += p.words.size();
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    return finish(std::move(result));
}

LabelParse parse_class_reply(std::string_view text, const labeling::ProblemSetup& setup) {
    auto parsed = parse_label(text, setup);
    if (parsed.outcome != LabelParse::Outcome::unparseable) return parsed;
    for (const auto& w : words_of(text)) {
        if (w.text.size() != 1 || !std::isdigit(static_cast<unsigned char>(w.text[0]))) continue;
        int id = w.text[0] - '0';
        if (id >= setup.classes) continue;
        parsed.matched_spans.push_back(
            {w.begin, w.end, labeling::label_index_from_class_id(id, setup.classes)});
    }
    return finish(std::move(parsed));
}

}  // namespace mllmsent::gateway
