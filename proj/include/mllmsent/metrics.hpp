#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mllmsent::evalkit {

/// Rows are true classes, columns predicted classes. Invalid predictions
/// (ambiguous or unparseable model output) are kept per true class outside
/// the matrix.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes = 0);

    std::size_t classes() const noexcept { return classes_; }
    std::size_t at(std::size_t truth, std::size_t predicted) const;
    std::size_t invalid_for(std::size_t truth) const { return invalid_.at(truth); }

    void add(std::size_t truth, std::size_t predicted, std::size_t n = 1);
    void add_invalid(std::size_t truth, std::size_t n = 1);
    void merge(const ConfusionMatrix& other);

    std::size_t total() const noexcept;  // valid predictions
    std::size_t invalid_count() const noexcept;
    std::size_t evaluated() const noexcept { return total() + invalid_count(); }
    std::size_t trace() const noexcept;
    std::size_t row_sum(std::size_t truth) const;
    std::size_t column_sum(std::size_t predicted) const;

    /// Same matrix with the invalid predictions dropped.
    ConfusionMatrix without_invalid() const;

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> invalid_;
};

nlohmann::json to_json(const ConfusionMatrix& cm);

enum class Averaging { macro, weighted };
std::string_view to_string(Averaging a);
Averaging averaging_from_string(std::string_view s);

/// Per-class F1 averaged over classes that occur in the truth, the
/// predictions or the invalid rows. Invalid predictions count as misses for
/// their true class and credit no predicted class.
double f_score(const ConfusionMatrix& cm, Averaging averaging = Averaging::macro);

/// Correct predictions over all evaluated instances, invalid ones included.
double accuracy(const ConfusionMatrix& cm);

}  // namespace mllmsent::evalkit
