#include "mllmsent/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mllmsent/error.hpp"

namespace mllmsent::evalkit {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0), invalid_(classes, 0) {}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
    if (truth >= classes_ || predicted >= classes_) throw std::out_of_range("confusion index");
    return counts_[truth * classes_ + predicted];
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t n) {
    if (truth >= classes_ || predicted >= classes_) throw std::out_of_range("confusion index");
    counts_[truth * classes_ + predicted] += n;
}

void ConfusionMatrix::add_invalid(std::size_t truth, std::size_t n) { invalid_.at(truth) += n; }

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw LengthMismatch("confusion matrices differ in size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    for (std::size_t i = 0; i < invalid_.size(); ++i) invalid_[i] += other.invalid_[i];
}

std::size_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::invalid_count() const noexcept {
    return std::accumulate(invalid_.begin(), invalid_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const noexcept {
    std::size_t t = 0;
    for (std::size_t c = 0; c < classes_; ++c) t += counts_[c * classes_ + c];
    return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
    return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += at(t, predicted);
    return s;
}

ConfusionMatrix ConfusionMatrix::without_invalid() const {
    ConfusionMatrix cm = *this;
    std::fill(cm.invalid_.begin(), cm.invalid_.end(), 0);
    return cm;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json invalid = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
        rows.push_back(std::move(row));
        invalid.push_back(cm.invalid_for(t));
    }
    return {{"counts", rows}, {"invalid_by_true_class", invalid},
            {"invalid_count", cm.invalid_count()}, {"total", cm.total()}};
}

std::string_view to_string(Averaging a) { return a == Averaging::macro ? "macro" : "weighted"; }

Averaging averaging_from_string(std::string_view s) {
    if (s == "macro") return Averaging::macro;
    if (s == "weighted") return Averaging::weighted;
    throw ConfigError("averaging must be 'macro' or 'weighted', got '" + std::string(s) + "'");
}

double f_score(const ConfusionMatrix& cm, Averaging averaging) {
    if (cm.evaluated() == 0) throw EmptyMatrix("f_score of an empty confusion matrix");
    double sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const double tp = static_cast<double>(cm.at(c, c));
        const double support = static_cast<double>(cm.row_sum(c) + cm.invalid_for(c));
        const double predicted = static_cast<double>(cm.column_sum(c));
        if (support == 0.0 && predicted == 0.0) continue;
        const double precision = predicted > 0.0 ? tp / predicted : 0.0;
        const double recall = support > 0.0 ? tp / support : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const double w = averaging == Averaging::macro ? 1.0 : support;
        sum += w * f1;
        weight_sum += w;
    }
    return weight_sum > 0.0 ? sum / weight_sum : 0.0;
}

double accuracy(const ConfusionMatrix& cm) {
    if (cm.evaluated() == 0) throw EmptyMatrix("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(cm.evaluated());
}

}  // namespace mllmsent::evalkit
