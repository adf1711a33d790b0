#include "mllmsent/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "mllmsent/csv.hpp"
#include "mllmsent/error.hpp"

namespace mllmsent::corpus {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

std::optional<int> parse_count(std::string_view text) {
    auto t = csv::trim(text);
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty() || value < 0) {
        return std::nullopt;
    }
    return value;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw SchemaMismatch(where(path, 1) + "missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

// Shared per-row validation and collection; throws or records rejects.
class Collector {
public:
    Collector(const std::filesystem::path& path, const IngestProfile& profile, Dataset& dataset,
              std::vector<RejectedRow>& rejected)
        : path_(path), profile_(profile), dataset_(dataset), rejected_(rejected) {}

    template <typename E>
    void reject(std::size_t line, const std::string& image_id, E error) {
        if (!profile_.skip_invalid) throw error;
        rejected_.push_back({line, image_id, error.kind(), error.what()});
    }

    void add(std::size_t line, AnnotationRecord record) {
        const auto c = dataset_.category_count();
        if (record.image_id.empty()) {
            reject(line, record.image_id, SchemaMismatch(where(path_, line) + "empty image_id"));
            return;
        }
        if (record.votes.size() != c) {
            reject(line, record.image_id,
                   SchemaMismatch(where(path_, line) + "expected " + std::to_string(c) +
                                  " vote counts, found " + std::to_string(record.votes.size())));
            return;
        }
        const int sum = std::accumulate(record.votes.begin(), record.votes.end(), 0);
        if (sum != dataset_.evaluator_count) {
            reject(line, record.image_id,
                   VoteSumViolation(record.image_id,
                                    where(path_, line) + "votes for image '" + record.image_id +
                                        "' sum to " + std::to_string(sum) + ", expected " +
                                        std::to_string(dataset_.evaluator_count)));
            return;
        }
        if (!seen_.insert(record.image_id).second) {
            reject(line, record.image_id,
                   DuplicateImageId(where(path_, line) + "duplicate image_id '" + record.image_id +
                                    "'"));
            return;
        }
        record.dataset_id = dataset_.id;
        dataset_.records.push_back(std::move(record));
    }

private:
    const std::filesystem::path& path_;
    const IngestProfile& profile_;
    Dataset& dataset_;
    std::vector<RejectedRow>& rejected_;
    std::unordered_set<std::string> seen_;
};

void read_wide(csv::Reader& reader, const std::vector<std::string>& header,
               const std::vector<std::size_t>& vote_idx, std::size_t id_idx,
               std::optional<std::size_t> uri_idx, const std::filesystem::path& path,
               Collector& collector) {
    std::vector<std::string> row;
    while (reader.next(row)) {
        const auto line = reader.line();
        if (row.size() != header.size()) {
            std::string id = id_idx < row.size() ? csv::trim(row[id_idx]) : std::string{};
            collector.reject(line, id,
                             SchemaMismatch(where(path, line) + "expected " +
                                            std::to_string(header.size()) + " columns, found " +
                                            std::to_string(row.size())));
            continue;
        }
        AnnotationRecord rec;
        rec.image_id = csv::trim(row[id_idx]);
        if (uri_idx) rec.image_uri = csv::trim(row[*uri_idx]);
        bool ok = true;
        for (auto idx : vote_idx) {
            auto v = parse_count(row[idx]);
            if (!v) {
                collector.reject(line, rec.image_id,
                                 SchemaMismatch(where(path, line) + "column '" + header[idx] +
                                                "' is not a non-negative integer: '" + row[idx] +
                                                "'"));
                ok = false;
                break;
            }
            rec.votes.push_back(*v);
        }
        if (ok) collector.add(line, std::move(rec));
    }
}

void read_long(csv::Reader& reader, const std::vector<std::string>& header,
               const IngestProfile& profile, const std::filesystem::path& path,
               const Dataset& dataset, Collector& collector) {
    const auto id_idx = column_index(header, profile.id_column, path);
    const auto label_idx = column_index(header, profile.label_column, path);
    std::optional<std::size_t> uri_idx;
    if (std::find(header.begin(), header.end(), profile.uri_column) != header.end()) {
        uri_idx = column_index(header, profile.uri_column, path);
    }
    const auto c = dataset.category_count();

    struct Pending {
        std::size_t line;
        AnnotationRecord record;
    };
    std::vector<Pending> order;
    std::unordered_map<std::string, std::size_t> index;

    std::vector<std::string> row;
    while (reader.next(row)) {
        const auto line = reader.line();
        if (row.size() != header.size()) {
            collector.reject(line, "",
                             SchemaMismatch(where(path, line) + "expected " +
                                            std::to_string(header.size()) + " columns, found " +
                                            std::to_string(row.size())));
            continue;
        }
        auto id = csv::trim(row[id_idx]);
        auto label = lower(csv::trim(row[label_idx]));
        std::optional<std::size_t> category;
        for (std::size_t i = 0; i < c; ++i) {
            if (lower(dataset.category_names[i]) == label) category = i;
        }
        if (!category) {
            if (auto n = parse_count(label); n && *n >= 1 && static_cast<std::size_t>(*n) <= c) {
                category = static_cast<std::size_t>(*n - 1);
            }
        }
        if (!category) {
            collector.reject(line, id,
                             SchemaMismatch(where(path, line) + "unknown category '" + label + "'"));
            continue;
        }
        auto [it, inserted] = index.try_emplace(id, order.size());
        if (inserted) {
            AnnotationRecord rec;
            rec.image_id = id;
            if (uri_idx) rec.image_uri = csv::trim(row[*uri_idx]);
            rec.votes.assign(c, 0);
            order.push_back({line, std::move(rec)});
        }
        order[it->second].record.votes[*category] += 1;
    }
    for (auto& p : order) collector.add(p.line, std::move(p.record));
}

}  // namespace

std::string_view to_string(DatasetId id) {
    switch (id) {
        case DatasetId::percept5: return "percept5";
        case DatasetId::deep2: return "deep2";
        case DatasetId::custom: return "custom";
    }
    return "custom";
}

DatasetId dataset_id_from_string(std::string_view name) {
    if (name == "percept5") return DatasetId::percept5;
    if (name == "deep2") return DatasetId::deep2;
    if (name == "custom") return DatasetId::custom;
    throw ConfigError("unknown dataset id '" + std::string(name) + "'");
}

std::vector<std::string> native_categories(DatasetId id) {
    switch (id) {
        case DatasetId::percept5:
            return {"positive", "slightly positive", "neutral", "slightly negative", "negative"};
        case DatasetId::deep2: return {"positive", "negative"};
        case DatasetId::custom: return {};
    }
    return {};
}

IngestProfile IngestProfile::for_dataset(DatasetId id) {
    IngestProfile p;
    p.dataset = id;
    p.category_names = native_categories(id);
    p.evaluator_count = 5;
    return p;
}

IngestProfile::Layout layout_from_string(std::string_view name) {
    if (name == "normalized") return IngestProfile::Layout::normalized;
    if (name == "wide") return IngestProfile::Layout::wide;
    if (name == "long") return IngestProfile::Layout::long_form;
    throw ConfigError("unknown ingestion layout '" + std::string(name) + "'");
}

IngestResult ingest(const std::filesystem::path& path, const IngestProfile& profile) {
    if (!std::filesystem::is_regular_file(path)) {
        throw MissingFile("annotation file not found: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open annotation file: " + path.string());

    IngestResult result;
    Dataset& d = result.dataset;
    d.id = profile.dataset;
    d.category_names =
        profile.category_names.empty() ? native_categories(profile.dataset) : profile.category_names;
    d.evaluator_count = profile.evaluator_count;
    if (d.category_names.empty()) {
        throw SchemaMismatch("profile for " + path.string() + " declares no categories");
    }
    if (d.evaluator_count < 1) throw SchemaMismatch("evaluator count must be positive");

    csv::Reader reader(in, profile.delimiter);
    std::vector<std::string> header;
    if (!reader.next(header)) {
        throw SchemaMismatch(where(path, 1) + "missing header row");
    }
    for (auto& h : header) h = csv::trim(h);

    Collector collector(path, profile, d, result.rejected);
    const auto c = d.category_count();

    switch (profile.layout) {
        case IngestProfile::Layout::normalized: {
            std::vector<std::string> expected{"image_id", "image_uri"};
            for (std::size_t i = 1; i <= c; ++i) expected.push_back("v" + std::to_string(i));
            if (header != expected) {
                std::string want;
                for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
                throw SchemaMismatch(where(path, 1) + "header must be '" + want + "'");
            }
            std::vector<std::size_t> votes(c);
            std::iota(votes.begin(), votes.end(), std::size_t{2});
            read_wide(reader, header, votes, 0, std::size_t{1}, path, collector);
            break;
        }
        case IngestProfile::Layout::wide: {
            if (profile.vote_columns.size() != c) {
                throw SchemaMismatch("profile lists " + std::to_string(profile.vote_columns.size()) +
                                     " vote columns for " + std::to_string(c) + " categories");
            }
            std::vector<std::size_t> votes;
            for (const auto& name : profile.vote_columns) {
                votes.push_back(column_index(header, name, path));
            }
            std::optional<std::size_t> uri;
            if (std::find(header.begin(), header.end(), profile.uri_column) != header.end()) {
                uri = column_index(header, profile.uri_column, path);
            }
            read_wide(reader, header, votes, column_index(header, profile.id_column, path), uri,
                      path, collector);
            break;
        }
        case IngestProfile::Layout::long_form:
            read_long(reader, header, profile, path, d, collector);
            break;
    }

    if (profile.expected_records && *profile.expected_records != d.records.size()) {
        throw SchemaMismatch(path.string() + ": expected " +
                             std::to_string(*profile.expected_records) + " records, ingested " +
                             std::to_string(d.records.size()));
    }
    return result;
}

DatasetStats stats(const Dataset& d) {
    DatasetStats s;
    s.records = d.records.size();
    s.category_totals.assign(d.category_count(), 0);
    for (const auto& r : d.records) {
        int top = 0;
        for (std::size_t i = 0; i < r.votes.size(); ++i) {
            s.category_totals[i] += r.votes[i];
            s.total_votes += r.votes[i];
            top = std::max(top, r.votes[i]);
        }
        ++s.max_vote_histogram[top];
    }
    return s;
}

nlohmann::json to_json(const DatasetStats& s, const Dataset& d) {
    nlohmann::json totals = nlohmann::json::object();
    for (std::size_t i = 0; i < s.category_totals.size(); ++i) {
        totals[d.category_names[i]] = s.category_totals[i];
    }
    nlohmann::json hist = nlohmann::json::object();
    for (auto [votes, n] : s.max_vote_histogram) hist[std::to_string(votes)] = n;
    return {{"dataset", to_string(d.id)},
            {"records", s.records},
            {"evaluators", d.evaluator_count},
            {"categories", d.category_names},
            {"total_votes", s.total_votes},
            {"category_totals", totals},
            {"max_vote_histogram", hist}};
}

nlohmann::json to_json(const std::vector<RejectedRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back(
            {{"line", r.line}, {"image_id", r.image_id}, {"error", r.kind}, {"message", r.message}});
    }
    return out;
}

}  // namespace mllmsent::corpus
