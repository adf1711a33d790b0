#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mllmsent/corpus.hpp"

namespace mllmsent::labeling {

/// An agreement threshold paired with a class granularity, e.g. <sigma_3, P_5>.
struct ProblemSetup {
    int threshold = 3;  // minimum votes the dominant class needs
    int classes = 5;
    corpus::DatasetId dataset = corpus::DatasetId::percept5;
    std::vector<std::string> labels;  // most positive first

    /// Canonical setup for a dataset. Throws InvalidSetup for unknown class
    /// counts and UnsupportedMerge when the dataset cannot be regrouped.
    static ProblemSetup make(corpus::DatasetId dataset, int threshold, int classes);

    std::string name() const;  // "sigma3_p5"
    void validate(int evaluator_count) const;

    friend bool operator==(const ProblemSetup&, const ProblemSetup&) = default;
};

std::vector<std::string> canonical_labels(int classes);

nlohmann::json to_json(const ProblemSetup& s);
ProblemSetup setup_from_json(const nlohmann::json& j);

/// Regroups 5-category votes: 3 -> (v1+v2, v3, v4+v5), 2 -> (v1+v2+v3, v4+v5).
/// from_c == to_c is the identity.
std::vector<int> merge_votes(std::span<const int> votes, int from_c, int to_c);

enum class Exclusion { below_threshold, tie };

struct Dominance {
    std::optional<std::size_t> label;
    std::optional<Exclusion> excluded;

    bool kept() const noexcept { return label.has_value(); }
};

/// Dominant category of a vote vector: the unique argmax, provided it reaches
/// the threshold. Ties at the maximum exclude the image.
Dominance dominant(std::span<const int> votes, int threshold);

struct LabeledInstance {
    std::string image_id;
    std::string image_uri;
    std::size_t label_index = 0;
    std::vector<int> merged_votes;
};

struct LabeledSubset {
    ProblemSetup setup;
    std::vector<LabeledInstance> instances;

    std::vector<std::size_t> labels() const;
    std::vector<std::string> ids() const;
};

/// Merges and filters every record of `d`, keeping file order.
LabeledSubset build_subset(const corpus::Dataset& d, const ProblemSetup& setup);

void write_jsonl(const LabeledSubset& subset, const std::filesystem::path& path);
LabeledSubset read_jsonl(const std::filesystem::path& path);

/// Wire-side class id used by text classifiers: the most positive class gets
/// the highest id ({"Positive": 2, "Neutral": 1, "Negative": 0} for P_3).
inline int class_id(std::size_t label_index, int classes) {
    return classes - 1 - static_cast<int>(label_index);
}
inline std::size_t label_index_from_class_id(int id, int classes) {
    return static_cast<std::size_t>(classes - 1 - id);
}

}  // namespace mllmsent::labeling
