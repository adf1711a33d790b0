#include "mllmsent/labeling.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "mllmsent/error.hpp"

namespace mllmsent::labeling {

std::vector<std::string> canonical_labels(int classes) {
    switch (classes) {
        case 5: return {"positive", "slightly positive", "neutral", "slightly negative", "negative"};
        case 3: return {"positive", "neutral", "negative"};
        case 2: return {"positive", "negative"};
        default: throw InvalidSetup("class count must be 2, 3 or 5, got " + std::to_string(classes));
    }
}

ProblemSetup ProblemSetup::make(corpus::DatasetId dataset, int threshold, int classes) {
    ProblemSetup s;
    s.threshold = threshold;
    s.classes = classes;
    s.dataset = dataset;
    s.labels = canonical_labels(classes);
    if (dataset == corpus::DatasetId::deep2 && classes != 2) {
        throw UnsupportedMerge("deep2 is natively two-class; P_" + std::to_string(classes) +
                               " is not derivable");
    }
    if (threshold < 1) throw InvalidSetup("agreement threshold must be >= 1");
    return s;
}

std::string ProblemSetup::name() const {
    return "sigma" + std::to_string(threshold) + "_p" + std::to_string(classes);
}

void ProblemSetup::validate(int evaluator_count) const {
    if (static_cast<int>(labels.size()) != classes) {
        throw InvalidSetup("setup " + name() + " has " + std::to_string(labels.size()) + " labels");
    }
    if (threshold < 1 || threshold > evaluator_count) {
        throw InvalidSetup("threshold " + std::to_string(threshold) + " outside 1.." +
                           std::to_string(evaluator_count));
    }
}

nlohmann::json to_json(const ProblemSetup& s) {
    return {{"dataset", corpus::to_string(s.dataset)},
            {"threshold", s.threshold},
            {"classes", s.classes},
            {"labels", s.labels},
            {"name", s.name()}};
}

ProblemSetup setup_from_json(const nlohmann::json& j) {
    auto s = ProblemSetup::make(corpus::dataset_id_from_string(j.at("dataset").get<std::string>()),
                                j.at("threshold").get<int>(), j.at("classes").get<int>());
    return s;
}

std::vector<int> merge_votes(std::span<const int> votes, int from_c, int to_c) {
    if (static_cast<int>(votes.size()) != from_c) {
        throw UnsupportedMerge("vote vector has " + std::to_string(votes.size()) +
                               " entries, expected " + std::to_string(from_c));
    }
    if (from_c == to_c) return {votes.begin(), votes.end()};
    if (from_c == 5 && to_c == 3) {
        return {votes[0] + votes[1], votes[2], votes[3] + votes[4]};
    }
    if (from_c == 5 && to_c == 2) {
        return {votes[0] + votes[1] + votes[2], votes[3] + votes[4]};
    }
    throw UnsupportedMerge("cannot merge " + std::to_string(from_c) + " categories into " +
                           std::to_string(to_c));
}

Dominance dominant(std::span<const int> votes, int threshold) {
    Dominance d;
    if (votes.empty()) {
        d.excluded = Exclusion::below_threshold;
        return d;
    }
    auto top = std::max_element(votes.begin(), votes.end());
    if (*top < threshold) {
        d.excluded = Exclusion::below_threshold;
        return d;
    }
    if (std::count(votes.begin(), votes.end(), *top) > 1) {
        d.excluded = Exclusion::tie;
        return d;
    }
    d.label = static_cast<std::size_t>(top - votes.begin());
    return d;
}

std::vector<std::size_t> LabeledSubset::labels() const {
    std::vector<std::size_t> out;
    out.reserve(instances.size());
    for (const auto& i : instances) out.push_back(i.label_index);
    return out;
}

std::vector<std::string> LabeledSubset::ids() const {
    std::vector<std::string> out;
    out.reserve(instances.size());
    for (const auto& i : instances) out.push_back(i.image_id);
    return out;
}

LabeledSubset build_subset(const corpus::Dataset& d, const ProblemSetup& setup) {
    setup.validate(d.evaluator_count);
    if (setup.dataset != d.id) {
        throw InvalidSetup("setup for " + std::string(corpus::to_string(setup.dataset)) +
                           " applied to dataset " + std::string(corpus::to_string(d.id)));
    }
    const int native = static_cast<int>(d.category_count());
    LabeledSubset out{setup, {}};
    for (const auto& r : d.records) {
        auto merged = merge_votes(r.votes, native, setup.classes);
        auto dom = dominant(merged, setup.threshold);
        if (!dom.kept()) continue;
        out.instances.push_back({r.image_id, r.image_uri, *dom.label, std::move(merged)});
    }
    return out;
}

void write_jsonl(const LabeledSubset& subset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const auto setup = to_json(subset.setup);
    for (const auto& i : subset.instances) {
        nlohmann::json line{{"image_id", i.image_id},
                            {"image_uri", i.image_uri},
                            {"setup", setup},
                            {"label_index", i.label_index},
                            {"merged_votes", i.merged_votes}};
        out << line.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledSubset read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("subset file not found: " + path.string());
    LabeledSubset subset;
    bool have_setup = false;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw SchemaMismatch(path.string() + ":" + std::to_string(n) + ": invalid JSON");
        }
        auto setup = setup_from_json(j.at("setup"));
        if (!have_setup) {
            subset.setup = setup;
            have_setup = true;
        } else if (!(setup == subset.setup)) {
            throw SchemaMismatch(path.string() + ":" + std::to_string(n) + ": mixed setups");
        }
        subset.instances.push_back({j.at("image_id").get<std::string>(),
                                    j.value("image_uri", std::string{}),
                                    j.at("label_index").get<std::size_t>(),
                                    j.at("merged_votes").get<std::vector<int>>()});
    }
    return subset;
}

}  // namespace mllmsent::labeling
