#pragma once

// Morris-Lecar burster with a slowly varying applied current I:
//     v' = I - 0.5 (v + 0.5) - 2 w (v + 0.7) - m_inf(v) (v - 1)
//     w' = 1.15 (w_inf(v) - w) cosh((v - 0.1) / 0.29)
//     I' = eps (k - v)
// in fast time, with
//     m_inf(v) = 0.5 (1 + tanh((v + 0.01) / 0.15)),
//     w_inf(v) = 0.5 (1 + tanh((v - 0.1) / 0.145)).
// The system objects use the slow-time form, state z = (v, w, I).
//
// The rescaled variant divides the field by (k - v) so that I' = 1 and I serves
// as the time along trajectories; it is singular on the plane v = k.

#include "smst/core.hpp"

namespace smst::models {

struct MorrisLecarParams {
    double k = -0.22;
    double epsilon = 0.002;
};

[[nodiscard]] double ml_m_inf(double v);
[[nodiscard]] double ml_w_inf(double v);

/// Applied current at which (v, w_inf(v)) is an equilibrium of the fast subsystem.
[[nodiscard]] double ml_critical_current(double v);
/// d/dv of ml_critical_current.
[[nodiscard]] double ml_critical_current_slope(double v);

/// (v, w_inf(v), ml_critical_current(v)).
[[nodiscard]] Vector ml_critical_curve(double v);

[[nodiscard]] SlowFastSystem ml_system(const MorrisLecarParams& params);
[[nodiscard]] SlowFastSystem ml_rescaled_system(const MorrisLecarParams& params);

/// Slow-time fields of the two variants, z = (v, w, I).
[[nodiscard]] Vector ml_field(const Vector& z, const MorrisLecarParams& params);
[[nodiscard]] Vector ml_rescaled_field(const Vector& z, const MorrisLecarParams& params);

/// Turning points of ml_critical_current on v in [-0.5, 0.5], ordered by v.
[[nodiscard]] std::vector<double> ml_folds();

}  // namespace smst::models
