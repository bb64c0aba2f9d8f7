#pragma once

#include <optional>
#include <span>

namespace nframe::stats {

double mean(std::span<const double> values);
// Sample standard deviation (m − 1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

struct Interval {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
};

// Two-sided Student-t interval: mean ± t_{(1+level)/2, m−1} · s / √m. Needs m >= 2.
Interval t_interval(std::span<const double> values, double level = 0.95);

// Empty when either side has zero variance or fewer than two pairs are given.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks (ties share their mean rank).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace nframe::stats
