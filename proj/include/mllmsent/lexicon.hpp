#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mllmsent/caption_cache.hpp"
#include "mllmsent/labeling.hpp"

namespace mllmsent::lexicon {

struct LexiconTable {
    std::unordered_map<std::string, double> entries;   // token -> valence
    std::unordered_map<std::string, double> boosters;  // token -> increment
    std::unordered_set<std::string> negators;

    /// Reads `valence.tsv`, `boosters.tsv` and `negators.txt` from `dir`.
    static LexiconTable load_dir(const std::filesystem::path& dir);
    /// `token<TAB>valence` lines; '#' starts a comment line.
    static std::unordered_map<std::string, double> read_tsv(const std::filesystem::path& path);
    static std::unordered_set<std::string> read_list(const std::filesystem::path& path);

    bool is_negator(std::string_view token) const;
};

enum class Polarity { negative, neutral, positive };
std::string_view to_string(Polarity p);

struct ScoreOptions {
    double alpha = 15.0;
    double negation_scale = -0.74;
    std::size_t window = 3;  // preceding tokens inspected for negators and boosters
    double positive_threshold = 0.5;
    double negative_threshold = -0.5;
};

struct CompoundScore {
    double value = 0.0;  // in (-1, 1)
    Polarity label = Polarity::neutral;
};

/// Lowercased word tokens; apostrophes stay inside words ("don't").
std::vector<std::string> tokenize(std::string_view text);

/// Valence sum before normalization.
double raw_sum(const std::vector<std::string>& tokens, const LexiconTable& lex,
               const ScoreOptions& opts = {});

double normalize(double raw, double alpha = 15.0);
Polarity polarity_of(double value, const ScoreOptions& opts = {});

/// Compound score: per-token valences with booster increments and negation
/// flips, normalized by x / sqrt(x^2 + alpha) and thresholded.
CompoundScore score(std::string_view text, const LexiconTable& lex, const ScoreOptions& opts = {});

/// Label index for a caption under P_3 (thresholded) or P_2 (sign rule).
/// P_5 is rejected with UnsupportedSetup.
std::size_t classify_caption(const gateway::CaptionRecord& caption,
                             const labeling::ProblemSetup& setup, const LexiconTable& lex,
                             const ScoreOptions& opts = {});
std::size_t classify_text(std::string_view text, const labeling::ProblemSetup& setup,
                          const LexiconTable& lex, const ScoreOptions& opts = {});

}  // namespace mllmsent::lexicon
