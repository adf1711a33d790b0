#include "mllmsent/statistics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mllmsent/error.hpp"

namespace mllmsent::evalkit {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw TooFewScores("mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
    if (xs.size() < 2) throw TooFewScores("standard deviation needs at least 2 values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double t_quantile_975(double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.975);
}

Interval ci95(std::span<const double> scores) {
    if (scores.size() < 2) {
        throw TooFewScores("a confidence interval needs at least 2 scores, got " +
                           std::to_string(scores.size()));
    }
    const double k = static_cast<double>(scores.size());
    return {mean(scores), t_quantile_975(k - 1.0) * sample_stddev(scores) / std::sqrt(k)};
}

PairedT paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("paired samples of length " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    if (a.size() < 2) throw TooFewScores("paired t-test needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

    const double md = mean(d);
    const double sd = sample_stddev(d);
    if (sd == 0.0) {
        if (md == 0.0) return {0.0, 1.0};
        throw ZeroVarianceDifferences("all paired differences equal " + std::to_string(md) +
                                      "; the t statistic is undefined");
    }
    const double n = static_cast<double>(d.size());
    const double t = md / (sd / std::sqrt(n));
    boost::math::students_t dist(n - 1.0);
    const double p = 2.0 * boost::math::cdf(dist, -std::abs(t));
    return {t, std::min(1.0, p)};
}

double relative_gain(double x, double baseline) {
    if (!(baseline > 0.0)) {
        throw NonpositiveBaseline("relative gain needs a positive baseline, got " +
                                  std::to_string(baseline));
    }
    return (x - baseline) / baseline;
}

}  // namespace mllmsent::evalkit
