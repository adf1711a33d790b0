#include "mllmsent/lexicon.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "mllmsent/csv.hpp"
#include "mllmsent/error.hpp"

namespace mllmsent::lexicon {

namespace {

// Booster influence fades with distance from the boosted word.
constexpr double kBoosterDamping[] = {1.0, 0.95, 0.9};

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("lexicon file not found: " + path.string());
    return in;
}

}  // namespace

std::unordered_map<std::string, double> LexiconTable::read_tsv(const std::filesystem::path& path) {
    auto in = open(path);
    std::unordered_map<std::string, double> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        auto where = path.string() + ":" + std::to_string(n);
        if (tab == std::string::npos) throw LexiconFormat(where + ": expected token<TAB>value");
        auto token = csv::trim(line.substr(0, tab));
        auto value_text = csv::trim(line.substr(tab + 1));
        double value = 0.0;
        auto [ptr, ec] =
            std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size() ||
            !std::isfinite(value)) {
            throw LexiconFormat(where + ": bad value '" + value_text + "'");
        }
        for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (token.empty()) throw LexiconFormat(where + ": empty token");
        if (!out.emplace(token, value).second) {
            throw LexiconFormat(where + ": duplicate token '" + token + "'");
        }
    }
    return out;
}

std::unordered_set<std::string> LexiconTable::read_list(const std::filesystem::path& path) {
    auto in = open(path);
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto token = csv::trim(line);
        if (token.empty() || token[0] == '#') continue;
        for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.insert(token);
    }
    return out;
}

LexiconTable LexiconTable::load_dir(const std::filesystem::path& dir) {
    LexiconTable t;
    t.entries = read_tsv(dir / "valence.tsv");
    t.boosters = read_tsv(dir / "boosters.tsv");
    t.negators = read_list(dir / "negators.txt");
    return t;
}

bool LexiconTable::is_negator(std::string_view token) const {
    return negators.contains(std::string(token)) || token.ends_with("n't");
}

std::string_view to_string(Polarity p) {
    switch (p) {
        case Polarity::negative: return "negative";
        case Polarity::neutral: return "neutral";
        case Polarity::positive: return "positive";
    }
    return "neutral";
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto b = cur.find_first_not_of('\'');
        if (b != std::string::npos) {
            auto e = cur.find_last_not_of('\'');
            out.push_back(cur.substr(b, e - b + 1));
        }
        cur.clear();
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '\'') {
            cur += static_cast<char>(std::tolower(c));
        } else if (c >= 0x80) {
            // keep UTF-8 continuation bytes attached to the word
            cur += ch;
        } else {
            flush();
        }
    }
    flush();
    return out;
}

double raw_sum(const std::vector<std::string>& tokens, const LexiconTable& lex,
               const ScoreOptions& opts) {
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (lex.boosters.contains(tokens[i])) continue;
        auto it = lex.entries.find(tokens[i]);
        if (it == lex.entries.end() || it->second == 0.0) continue;
        const double valence = it->second;
        const double sign = valence > 0 ? 1.0 : -1.0;

        double magnitude = std::abs(valence);
        bool negated = false;
        for (std::size_t back = 1; back <= opts.window && back <= i; ++back) {
            const auto& prev = tokens[i - back];
            if (auto b = lex.boosters.find(prev); b != lex.boosters.end()) {
                const double damp = back <= 3 ? kBoosterDamping[back - 1] : kBoosterDamping[2];
                magnitude += b->second * damp;
            }
            if (lex.is_negator(prev)) negated = true;
        }
        double contribution = sign * std::max(0.0, magnitude);
        if (negated) contribution *= opts.negation_scale;
        sum += contribution;
    }
    return sum;
}

double normalize(double raw, double alpha) {
    if (raw == 0.0) return 0.0;
    return raw / std::sqrt(raw * raw + alpha);
}

Polarity polarity_of(double value, const ScoreOptions& opts) {
    if (value > opts.positive_threshold) return Polarity::positive;
    if (value < opts.negative_threshold) return Polarity::negative;
    return Polarity::neutral;
}

CompoundScore score(std::string_view text, const LexiconTable& lex, const ScoreOptions& opts) {
    if (lex.entries.empty()) throw EmptyLexicon("lexicon has no valence entries");
    CompoundScore s;
    s.value = normalize(raw_sum(tokenize(text), lex, opts), opts.alpha);
    s.label = polarity_of(s.value, opts);
    return s;
}

std::size_t classify_text(std::string_view text, const labeling::ProblemSetup& setup,
                          const LexiconTable& lex, const ScoreOptions& opts) {
    if (setup.classes != 3 && setup.classes != 2) {
        throw UnsupportedSetup("the lexicon baseline only separates coarse polarity; " +
                               setup.name() + " is not supported");
    }
    const auto s = score(text, lex, opts);
    if (setup.classes == 2) return s.value > 0.0 ? 0 : 1;
    switch (s.label) {
        case Polarity::positive: return 0;
        case Polarity::neutral: return 1;
        case Polarity::negative: return 2;
    }
    return 1;
}

std::size_t classify_caption(const gateway::CaptionRecord& caption,
                             const labeling::ProblemSetup& setup, const LexiconTable& lex,
                             const ScoreOptions& opts) {
    return classify_text(caption.caption_text, setup, lex, opts);
}

}  // namespace mllmsent::lexicon
