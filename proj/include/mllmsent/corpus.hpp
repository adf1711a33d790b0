#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mllmsent::corpus {

enum class DatasetId { percept5, deep2, custom };

std::string_view to_string(DatasetId id);
DatasetId dataset_id_from_string(std::string_view name);

/// Category names for the built-in datasets, most positive first.
std::vector<std::string> native_categories(DatasetId id);

struct AnnotationRecord {
    std::string image_id;
    std::string image_uri;
    std::vector<int> votes;  // one count per category, sums to the evaluator count
    DatasetId dataset_id = DatasetId::custom;
};

struct Dataset {
    DatasetId id = DatasetId::custom;
    std::vector<std::string> category_names;
    int evaluator_count = 5;
    std::vector<AnnotationRecord> records;

    std::size_t category_count() const noexcept { return category_names.size(); }
};

/// How the source file maps onto the normalized `image_id,image_uri,v1..vC` schema.
///
///   normalized  header must be exactly image_id,image_uri,v1..vC
///   wide        one row per image; vote counts read from `vote_columns`
///   long        one row per individual evaluation; `label_column` holds a
///               category name or 1-based category number, rows are
///               aggregated per image in order of first appearance
struct IngestProfile {
    enum class Layout { normalized, wide, long_form };

    DatasetId dataset = DatasetId::custom;
    Layout layout = Layout::normalized;
    char delimiter = ',';
    std::string id_column = "image_id";
    std::string uri_column = "image_uri";
    std::vector<std::string> vote_columns;
    std::string label_column = "label";
    std::vector<std::string> category_names;  // required for custom datasets
    int evaluator_count = 5;
    std::optional<std::size_t> expected_records;
    bool skip_invalid = false;

    static IngestProfile for_dataset(DatasetId id);
};

IngestProfile::Layout layout_from_string(std::string_view name);

struct RejectedRow {
    std::size_t line = 0;
    std::string image_id;
    std::string kind;
    std::string message;
};

struct IngestResult {
    Dataset dataset;
    std::vector<RejectedRow> rejected;  // populated only with skip_invalid
};

/// Loads and validates an annotation file. Malformed rows abort with the
/// matching error unless `profile.skip_invalid` is set, in which case they are
/// collected in `rejected` and left out of the dataset.
IngestResult ingest(const std::filesystem::path& path, const IngestProfile& profile);

struct DatasetStats {
    std::size_t records = 0;
    long long total_votes = 0;
    std::vector<long long> category_totals;
    std::map<int, std::size_t> max_vote_histogram;  // highest per-image vote count -> images
};

DatasetStats stats(const Dataset& d);

nlohmann::json to_json(const DatasetStats& s, const Dataset& d);
nlohmann::json to_json(const std::vector<RejectedRow>& rows);

}  // namespace mllmsent::corpus
