#pragma once

#include <span>

namespace mllmsent::evalkit {

struct Interval {
    double mean = 0.0;
    double halfwidth = 0.0;
};

double mean(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
double t_quantile_975(double dof);

/// mean +- t(0.975, k-1) * s / sqrt(k) over k fold scores.
Interval ci95(std::span<const double> scores);

struct PairedT {
    double t = 0.0;
    double p = 1.0;
};

/// Two-sided paired t-test on a[i] - b[i]. Identical samples give t = 0,
/// p = 1; constant nonzero differences throw ZeroVarianceDifferences.
PairedT paired_t(std::span<const double> a, std::span<const double> b);

/// (x - y) / y.
double relative_gain(double x, double baseline);

}  // namespace mllmsent::evalkit
