#pragma once

// Two reciprocally inhibiting cells with slow gating variables, slow-time form:
//     eps v_i' = h_i(v) - q_i,    q_i' = s v_i - q_i,    i = 1, 2,
// where
//     h_i(v) = a tanh(sigma_i v_i / a) - v_i - omega syn(v_j) (v_i - r),  j = 3 - i,
//     syn(x) = 1 / (1 + exp(-4 gamma (x - theta))).
// The critical manifold is the graph q = h(v). State z = (v1, v2, q1, q2).

#include "smst/core.hpp"

namespace smst::models {

struct ReciprocalInhibitionParams {
    double omega = 0.03;
    double gamma = 10.0;
    double r = -4.0;
    double theta = 0.01333;
    double a = 1.0;
    double s = 1.0;
    double sigma1 = 3.0;
    double sigma2 = 1.2652372051;
    double epsilon = 1e-4;
};

[[nodiscard]] double ri_synapse(double x, const ReciprocalInhibitionParams& params);

/// Critical-manifold graph q = h(v) and its Jacobian.
[[nodiscard]] Eigen::Vector2d ri_h(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params);
[[nodiscard]] Eigen::Matrix2d ri_dh(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params);

/// (v, h(v)) in R^4.
[[nodiscard]] Vector ri_lift(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params);

/// Reduced flow v' = Dh(v)^{-1} (s v - h(v)). Throws fold_singularity when Dh is singular.
[[nodiscard]] Eigen::Vector2d ri_slow_flow(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params);

[[nodiscard]] SlowFastSystem ri_system(const ReciprocalInhibitionParams& params);

}  // namespace smst::models
