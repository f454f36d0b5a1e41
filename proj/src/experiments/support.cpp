#include "smst/experiments/support.hpp"

#include <cmath>
#include <limits>

namespace smst::experiments {

namespace {

double fast_time_constant(const SlowFastSystem& system, const Vector& z) {
    try {
        return system.epsilon() / strong_directions(system, z).min_abs_real();
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

ShadowingReport shadowing_check(const SlowFastSystem& system, const TrajectorySegment& segment,
                                const ShadowingOptions& opts, const ivp::IvpOptions& ivp_opts) {
    require(segment.points() >= 2, "shadowing check needs at least two knots");
    require(opts.threshold > 0.0 && opts.horizon > 0.0 && opts.max_points >= 1, "invalid shadowing options");
    const int last = segment.points() - 1;
    const double a = segment.t(0);
    const double b = segment.t(last);
    const double span = b - a;
    const double tau = std::max(fast_time_constant(system, segment.z(0)), fast_time_constant(system, segment.z(last)));
    const double margin = std::min(0.25 * span, opts.margin * tau);
    const double horizon = opts.horizon * system.epsilon();

    std::vector<int> eligible;
    for (int j = 0; j <= last; ++j)
        if (segment.t(j) >= a + margin && segment.t(j) + horizon <= b - margin) eligible.push_back(j);
    std::vector<int> chosen;
    const int count = std::min<int>(opts.max_points, static_cast<int>(eligible.size()));
    for (int i = 0; i < count; ++i) {
        const size_t at = count == 1 ? eligible.size() / 2 : i * (eligible.size() - 1) / (count - 1);
        chosen.push_back(eligible[at]);
    }

    const auto deviations = parallel_map(static_cast<int>(chosen.size()), [&](int i) {
        const int j = chosen[static_cast<size_t>(i)];
        const auto orbit = ivp::integrate(system, segment.z(j), horizon, ivp_opts);
        double dev = 0.0;
        for (int k = 0; k < orbit.knots(); ++k)
            dev = std::max(dev, (orbit.z(k) - spline_at(system, segment, segment.t(j) + orbit.t(k))).norm());
        return dev;
    });

    ShadowingReport report;
    report.horizon = horizon;
    report.points = static_cast<int>(chosen.size());
    for (size_t i = 0; i < deviations.size(); ++i) {
        if (deviations[i] > report.max_deviation) {
            report.max_deviation = deviations[i];
            report.worst_index = chosen[i];
        }
    }
    report.passed = report.max_deviation <= opts.threshold;
    return report;
}

ShadowingReport require_shadowing(const SlowFastSystem& system, const TrajectorySegment& segment,
                                  const ShadowingOptions& opts, const ivp::IvpOptions& ivp_opts,
                                  const std::string& label) {
    auto report = shadowing_check(system, segment, opts, ivp_opts);
    if (!report.passed)
        fail(ErrorKind::shadowing_failed,
             label + ": spline deviates from the flow by " + std::to_string(report.max_deviation) + " over " +
                 std::to_string(report.horizon) + " slow time (threshold " + std::to_string(opts.threshold) + ")",
             segment.z(report.worst_index), report.worst_index);
    return report;
}

double golden_minimum(const std::function<double(double)>& f, double a, double b, int iterations) {
    constexpr double g = 0.6180339887498949;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

Approach nearest_on_segment(const SlowFastSystem& system, const TrajectorySegment& segment, const Vector& x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < segment.points(); ++j) {
        const double d = (segment.z(j) - x).norm();
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    Approach out{best_d, best, segment.t(best), x, segment.z(best)};
    auto dist = [&](double t) { return (spline_at(system, segment, t) - x).norm(); };
    for (int side : {-1, 1}) {
        const int other = best + side;
        if (other < 0 || other >= segment.points()) continue;
        const double lo = std::min(segment.t(best), segment.t(other));
        const double hi = std::max(segment.t(best), segment.t(other));
        const double t = golden_minimum(dist, lo, hi);
        const Vector p = spline_at(system, segment, t);
        const double d = (p - x).norm();
        if (d < out.distance) {
            out.distance = d;
            out.time = t;
            out.other = p;
        }
    }
    return out;
}

Approach nearest_approach(const SlowFastSystem& system, const ivp::Orbit& orbit, const TrajectorySegment& segment,
                          int first, int last) {
    if (last < 0) last = orbit.knots() - 1;
    require(first >= 0 && first <= last && last < orbit.knots(), "nearest_approach: knot range out of bounds");
    int best = first;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = first; i <= last; ++i) {
        for (int j = 0; j < segment.points(); ++j) {
            const double d = (orbit.z(i) - segment.z(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
    }
    Approach out = nearest_on_segment(system, segment, orbit.z(best));
    out.index = best;
    if (!orbit.has_dense() || orbit.knots() < 2) return out;
    auto dist = [&](double t) { return nearest_on_segment(system, segment, orbit.at(t)).distance; };
    for (int side : {-1, 1}) {
        const int other = best + side;
        if (other < first || other > last) continue;
        const double lo = std::min(orbit.t(best), orbit.t(other));
        const double hi = std::max(orbit.t(best), orbit.t(other));
        const double t = golden_minimum(dist, lo, hi, 40);
        Approach cand = nearest_on_segment(system, segment, orbit.at(t));
        if (cand.distance < out.distance) {
            const int index = out.index;
            out = cand;
            out.index = index;
        }
    }
    return out;
}

Approach nearest_approach(const ivp::Orbit& a, const ivp::Orbit& b, int first, int last) {
    if (last < 0) last = a.knots() - 1;
    require(first >= 0 && first <= last && last < a.knots(), "nearest_approach: knot range out of bounds");
    int best_a = first;
    int best_b = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = first; i <= last; ++i) {
        for (int j = 0; j < b.knots(); ++j) {
            const double d = (a.z(i) - b.z(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best_a = i;
                best_b = j;
            }
        }
    }
    Approach out{std::sqrt(best_d), best_a, b.t(best_b), a.z(best_a), b.z(best_b)};
    if (!b.has_dense() || b.knots() < 2) return out;
    const Vector& x = a.z(best_a);
    auto dist = [&](double t) { return (b.at(t) - x).norm(); };
    for (int side : {-1, 1}) {
        const int other = best_b + side;
        if (other < 0 || other >= b.knots()) continue;
        const double lo = std::min(b.t(best_b), b.t(other));
        const double hi = std::max(b.t(best_b), b.t(other));
        const double t = golden_minimum(dist, lo, hi);
        const Vector p = b.at(t);
        const double d = (p - x).norm();
        if (d < out.distance) {
            out.distance = d;
            out.time = t;
            out.other = p;
        }
    }
    return out;
}

double illinois(const std::function<double(double)>& f, double a, double b, double fa, double fb, double tolerance,
                int max_iterations) {
    require(fa * fb <= 0.0, "illinois: interval does not bracket a root");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    int side = 0;
    double c = a;
    for (int it = 0; it < max_iterations; ++it) {
        c = (a * fb - b * fa) / (fb - fa);
        const double fc = f(c);
        if (std::abs(fc) <= tolerance) return c;
        if ((fc > 0.0) == (fb > 0.0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(c))) return c;
    }
    return c;
}

}  // namespace smst::experiments
