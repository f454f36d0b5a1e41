#pragma once

// Linear benchmark with a saddle slow manifold:
//     eps x1' = y - x1,   eps x2' = x2,   y' = 1.
// The slow manifold is the line x1 = y - eps, x2 = 0.

#include "smst/core.hpp"

namespace smst::models {

struct LinearParams {
    double epsilon = 0.1;
};

[[nodiscard]] SlowFastSystem linear_system(const LinearParams& params);

/// Closed-form flow of the linear system from z0 over slow time t.
/// Throws model_evaluation if x2 overflows.
[[nodiscard]] Vector linear_exact(const Vector& z0, double t, double eps);

/// Per-interval decay factor of off-manifold deviations under the collocation
/// scheme with step delta.
[[nodiscard]] double linear_ratio(double delta, double eps);

/// Point (y, 0, y) on the critical manifold.
[[nodiscard]] Vector linear_critical(double y);

}  // namespace smst::models
