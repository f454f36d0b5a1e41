#pragma once

// FitzHugh-Nagumo travelling-wave equation on the slow time scale,
//     eps x1' = x2
//     eps x2' = (s x2 - cubic(x1) + y - p) / 5
//         y'  = (x1 - y) / s
// with cubic(u) = u (u - 1)(1/10 - u). The critical manifold is x2 = 0,
// y = c(x1) := cubic(x1) + p, with three branches separated by the turning
// points of c.

#include <utility>

#include "smst/core.hpp"

namespace smst::models {

struct FhnParams {
    double p = 0.0;
    double s = 1.2463;
    double epsilon = 1e-3;
};

[[nodiscard]] double fhn_cubic(double u);
[[nodiscard]] double fhn_cubic_slope(double u);

/// (x1, 0, c(x1)).
[[nodiscard]] Vector fhn_critical(double x1, double p);
/// (x1_-, x1_+): local minimum and maximum of c.
[[nodiscard]] std::pair<double, double> fhn_folds();
/// Midway between the two folds; the level of the matching section x1 = const.
[[nodiscard]] double fhn_section_level();
/// The unique equilibrium (x1*, 0, x1*).
[[nodiscard]] Vector fhn_equilibrium(double p);

/// Reduced flow along the chart x1 of the critical manifold.
[[nodiscard]] double fhn_chart_rate(double x1, const FhnParams& params);

[[nodiscard]] SlowFastSystem fhn_system(const FhnParams& params);

}  // namespace smst::models
