#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fadecast {

// Order-statistic quantile with linear interpolation between ranks
// (h = (n-1)p). Sorts a copy; fine at the sizes used here.
inline double quantile(std::span<const double> values, double p) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return [&]() {
        const std::size_t n = sorted.size();
        if (n == 1) return sorted[0];
        double h = static_cast<double>(n - 1) * p;
        auto lo = static_cast<std::size_t>(h);
        if (lo >= n - 1) return sorted[n - 1];
        double frac = h - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    }();
}

// In-place variant used for large pools: nth_element per rank instead of a
// full sort.
inline double quantile_inplace(std::vector<double>& values, double p) {
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    double h = static_cast<double>(n - 1) * p;
    auto lo = static_cast<std::size_t>(h);
    if (lo >= n - 1) {
        std::nth_element(values.begin(), values.end() - 1, values.end());
        return values[n - 1];
    }
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    double a = values[lo];
    double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    double frac = h - static_cast<double>(lo);
    return a + frac * (b - a);
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Population standard deviation (1/N).
inline double stddev_pop(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

inline double median(std::span<const double> v) { return quantile(v, 0.5); }

} // namespace fadecast
