#pragma once

// Helpers shared by the experiment sources.

#include <algorithm>
#include <limits>
#include <vector>

#include "smst/experiments/config.hpp"
#include "smst/experiments/support.hpp"

namespace smst::experiments::detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline ShadowingOptions shadowing_options(const Json& config) {
    ShadowingOptions o;
    o.threshold = get_double(config, "shadowing.threshold");
    o.horizon = get_double(config, "shadowing.horizon");
    o.margin = get_double(config, "shadowing.margin");
    o.max_points = get_int(config, "shadowing.points");
    return o;
}

inline Json to_json(const ShadowingReport& r) {
    return {{"max_deviation", r.max_deviation}, {"points", r.points}, {"horizon", r.horizon}, {"passed", r.passed}};
}

inline double median(std::vector<double> v) {
    require(!v.empty(), "median of an empty list");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Row indices 0, stride, 2 stride, ... of a sequence of length n, capped at
/// max_rows and always ending with n - 1.
inline std::vector<int> thinned(int n, int max_rows) {
    std::vector<int> picks;
    if (n <= 0) return picks;
    const int stride = std::max(1, (n + max_rows - 1) / max_rows);
    for (int i = 0; i < n; i += stride) picks.push_back(i);
    if (picks.back() != n - 1) picks.push_back(n - 1);
    return picks;
}

}  // namespace smst::experiments::detail
