#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"
#include "smst/experiments/experiments.hpp"

namespace smst::experiments {

namespace {

using detail::kNaN;

struct Departure {
    int sign = 0;
    double time = kNaN;
    bool censored = true;
    ivp::Orbit orbit{0.0, Vector::Zero(4)};
};

/// Integrates from knot j of gamma towards t_end and stops once the fast
/// coordinates are `threshold` away from gamma at the same time.
Departure depart(const SlowFastSystem& system, const TrajectorySegment& gamma, int j, const Vector& dir,
                 double displacement, double t_end, double threshold, const ivp::IvpOptions& opts) {
    Departure d;
    if (t_end == gamma.t(j)) return d;
    const double t_lo = gamma.t(0);
    const double t_hi = gamma.t(gamma.points() - 1);
    ivp::Event event{[&](double t, const Vector& z) {
                         const Vector ref = spline_at(system, gamma, std::clamp(t, t_lo, t_hi));
                         return (z.head(2) - ref.head(2)).norm() - threshold;
                     },
                     ivp::Direction::either, 1e-12};
    try {
        auto hit = ivp::integrate_to_event(ivp::field_of(system), gamma.z(j) + displacement * dir, gamma.t(j), t_end,
                                           event, opts);
        const Vector ref = spline_at(system, gamma, hit.time);
        d.sign = (hit.point - ref).dot(dir) > 0.0 ? 1 : -1;
        d.time = hit.time;
        d.censored = false;
        d.orbit = std::move(hit.orbit);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_crossing && e.kind() != ErrorKind::left_domain) throw;
    }
    return d;
}

}  // namespace

ExperimentResult ri_canard(const Json& config) {
    const auto params = ri_params(config);
    const auto system = models::ri_system(params);
    const auto base = get_doubles(config, "canard.base_point");
    const double span = get_double(config, "canard.t_span");
    const int points = get_int(config, "canard.points");
    const double disp = get_double(config, "canard.displacement");
    const auto fractions = get_doubles(config, "canard.fan_fractions");
    const double threshold = get_double(config, "canard.departure");
    const double interior = get_double(config, "canard.interior_fraction");
    const auto opts = ivp_options(config);
    require(base.size() == 4, "canard.base_point must have four coordinates (v1, v2, q1, q2)");
    require(span > 0.0 && points >= 2 && disp > 0.0 && threshold > 0.0, "invalid canard options");
    require(interior > 0.0 && interior <= 1.0, "canard.interior_fraction must be in (0, 1]");
    for (double f : fractions) require(f >= 0.0 && f <= 1.0, "canard.fan_fractions must lie in [0, 1]");

    ExperimentResult result;
    result.name = "ri_canard";

    // Project along q onto the critical manifold and follow the reduced flow.
    const Eigen::Vector2d v0(base[0], base[1]);
    const ivp::Rhs reduced = [&](double, const Vector& z) -> Vector {
        return models::ri_slow_flow(z.head<2>(), params);
    };
    const auto slow = ivp::integrate(reduced, Vector(v0), 0.0, span, opts);
    std::vector<double> ts;
    std::vector<Vector> zs;
    for (int j = 0; j <= points; ++j) {
        const double t = span * j / points;
        ts.push_back(t);
        zs.push_back(models::ri_lift(slow.at(t).head<2>(), params));
    }
    const TrajectorySegment candidate(Mesh(ts), zs);

    // Left: v1, v2 fixed at the base point. Right: the unstable coordinate and
    // the slow coordinate transverse to the reduced flow.
    Matrix left = Matrix::Zero(2, 4);
    left(0, 0) = 1.0;
    left(1, 1) = 1.0;
    const Vector& z_end = zs.back();
    const Eigen::Vector2d v_end = slow.end().head<2>();
    const Eigen::Vector2d q_dot = models::ri_dh(v_end, params) * models::ri_slow_flow(v_end, params);
    const Matrix rows = fast_coordinate_rows(system, z_end);
    Matrix right = Matrix::Zero(2, 4);
    right.row(0) = rows.bottomRows(1);
    right(1, 2) = -q_dot[1] / q_dot.norm();
    right(1, 3) = q_dot[0] / q_dot.norm();
    auto solve = smst_compute(system, candidate, smst_options(config),
                              std::make_pair(BoundaryManifold(left, zs.front()), BoundaryManifold(right, z_end)));
    if (!solve.report.converged) fail(ErrorKind::newton_failure, "canard solve did not converge: " + solve.report.message);
    const auto& gamma = solve.segment;
    const auto shadow =
        require_shadowing(system, gamma, detail::shadowing_options(config), opts, "reciprocal-inhibition canard");

    // Fast-coordinate deviation from the critical manifold at the same q.
    Table path("gamma", {"t [slow time]", "v1 [1]", "v2 [1]", "q1 [1]", "q2 [1]", "fast_deviation [1]"});
    Table reduced_table("slow_flow", {"t [slow time]", "v1 [1]", "v2 [1]", "q1 [1]", "q2 [1]"});
    const double lo = span * 0.5 * (1.0 - interior);
    const double hi = span - lo;
    double worst = 0.0;
    for (int j = 0; j <= points; ++j) {
        const Vector& z = gamma.z(j);
        const Vector x = critical_point(system, z.tail(2), z.head(2));
        const double dev = (z.head(2) - x).norm();
        path.add({gamma.t(j), z[0], z[1], z[2], z[3], dev});
        if (gamma.t(j) >= lo && gamma.t(j) <= hi) worst = std::max(worst, dev);
        reduced_table.add({ts[static_cast<size_t>(j)], zs[static_cast<size_t>(j)][0], zs[static_cast<size_t>(j)][1],
                           zs[static_cast<size_t>(j)][2], zs[static_cast<size_t>(j)][3]});
    }

    // Displaced fans; task i: fraction i / 4, family (i / 2) % 2 (0 unstable, 1 stable), side i % 2.
    std::vector<int> knots;
    for (double f : fractions) knots.push_back(static_cast<int>(std::lround(f * points)));
    const auto runs = parallel_map(4 * static_cast<int>(knots.size()), [&](int i) {
        const int j = knots[static_cast<size_t>(i / 4)];
        const bool unstable = (i / 2) % 2 == 0;
        const double side = i % 2 == 0 ? 1.0 : -1.0;
        const auto dirs = strong_directions(system, gamma.z(j));
        const Vector& e = unstable ? dirs.unstable_vectors[0] : dirs.stable_vectors[0];
        return depart(system, gamma, j, e, side * disp, unstable ? gamma.t(points) : gamma.t(0), threshold, opts);
    });

    Table departures("departures", {"fraction [1]", "launch_t [slow time]", "family [code]", "sign_plus [1]",
                                    "sign_minus [1]", "time_plus [slow time]", "time_minus [slow time]",
                                    "opposite [bool]", "censored [bool]"});
    Table fans("fans", {"fraction [1]", "family [code]", "side [1]", "t [slow time]", "v1 [1]", "v2 [1]", "q1 [1]",
                        "q2 [1]"});
    int unstable_pairs = 0;
    int unstable_opposite = 0;
    int stable_opposite = 0;
    for (size_t k = 0; k < knots.size(); ++k) {
        const int j = knots[k];
        for (int family = 0; family < 2; ++family) {
            const auto& plus = runs[4 * k + 2 * static_cast<size_t>(family)];
            const auto& minus = runs[4 * k + 2 * static_cast<size_t>(family) + 1];
            const bool censored = plus.censored || minus.censored;
            const bool opposite = !censored && plus.sign != minus.sign;
            departures.add({fractions[k], gamma.t(j), double(family), double(plus.sign), double(minus.sign), plus.time,
                            minus.time, opposite ? 1.0 : 0.0, censored ? 1.0 : 0.0});
            // Unstable pairs need room to separate before the interval ends.
            if (family == 0 && j < points) {
                ++unstable_pairs;
                if (opposite) ++unstable_opposite;
            }
            if (family == 1 && opposite) ++stable_opposite;
            for (const auto* run : {&plus, &minus}) {
                if (run->censored) continue;
                const double side = run == &plus ? 1.0 : -1.0;
                for (int i : detail::thinned(run->orbit.knots(), 400)) {
                    const auto& z = run->orbit.z(i);
                    fans.add({fractions[k], double(family), side, run->orbit.t(i), z[0], z[1], z[2], z[3]});
                }
            }
        }
    }

    result.add_table(std::move(path));
    result.add_table(std::move(reduced_table));
    result.add_table(std::move(departures));
    result.add_table(std::move(fans));
    Json report = to_json(solve.report);
    report["shadowing"] = detail::to_json(shadow);
    result.provenance["canard"] = report;
    result.set_metric("epsilon", params.epsilon);
    result.set_metric("newton_iterations", solve.report.iterations);
    result.set_metric("newton_residual", solve.report.final_residual);
    result.set_metric("left_pin_error", (gamma.z(0).head(2) - Vector(v0)).norm());
    result.set_metric("interior_fast_deviation", worst);
    result.set_metric("interior_fast_deviation_over_epsilon", worst / params.epsilon);
    result.set_metric("shadowing_max_deviation", shadow.max_deviation);
    result.set_metric("unstable_pairs", unstable_pairs);
    result.set_metric("unstable_pairs_opposite", unstable_opposite);
    result.set_metric("stable_pairs_opposite", stable_opposite);
    return result;
}

}  // namespace smst::experiments
