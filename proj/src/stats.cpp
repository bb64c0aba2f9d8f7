#include "nframe/stats.hpp"

#include "nframe/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace nframe::stats {

double mean(std::span<const double> values)
{
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values)
{
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

Interval t_interval(std::span<const double> values, double level)
{
    if (values.size() < 2) {
        throw Error(ErrorKind::InvalidInput, "t_interval needs at least two values");
    }
    const double m = mean(values);
    const double s = sample_stddev(values);
    const auto n = static_cast<double>(values.size());
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.5 + 0.5 * level);
    const double half = t * s / std::sqrt(n);
    return {m, m - half, m + half};
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorKind::Shape, "pearson: inputs differ in length");
    }
    if (x.size() < 2) return std::nullopt;
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorKind::Shape, "spearman: inputs differ in length");
    }
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

}  // namespace nframe::stats
