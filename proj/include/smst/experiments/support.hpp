#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "smst/ivp.hpp"
#include "smst/solver.hpp"

namespace smst::experiments {

/// Evaluates fn(0), ..., fn(count - 1) on a pool of worker threads and returns
/// the results in index order. The first exception by index is rethrown after
/// all tasks finish.
template <class Fn>
auto parallel_map(int count, Fn&& fn) -> std::vector<decltype(fn(0))> {
    using R = decltype(fn(0));
    std::vector<std::optional<R>> slots(static_cast<size_t>(std::max(count, 0)));
    std::vector<std::exception_ptr> errors(slots.size());
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                slots[static_cast<size_t>(i)].emplace(fn(i));
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(count, 1));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct ShadowingOptions {
    /// Largest admissible deviation between the spline and the true flow.
    double threshold = 1e-6;
    /// Integration horizon in units of eps.
    double horizon = 5.0;
    /// Start points are kept this many fast time constants (eps / |Re lambda|)
    /// away from both ends, but never more than a quarter of the span.
    double margin = 20.0;
    int max_points = 12;
};

struct ShadowingReport {
    double max_deviation = 0.0;
    int points = 0;
    int worst_index = -1;
    double horizon = 0.0;
    bool passed = true;
};

/// Integrates the true flow from interior knots over the horizon and measures
/// the distance to the Hermite spline of the segment.
[[nodiscard]] ShadowingReport shadowing_check(const SlowFastSystem& system, const TrajectorySegment& segment,
                                              const ShadowingOptions& opts, const ivp::IvpOptions& ivp_opts);

/// As shadowing_check, throwing shadowing_failed when the threshold is exceeded.
ShadowingReport require_shadowing(const SlowFastSystem& system, const TrajectorySegment& segment,
                                  const ShadowingOptions& opts, const ivp::IvpOptions& ivp_opts,
                                  const std::string& label);

struct Approach {
    double distance = 0.0;
    /// Knot of the first curve nearest to the second curve.
    int index = -1;
    /// Parameter (time) on the second curve at the nearest point.
    double time = 0.0;
    Vector point;
    Vector other;
};

/// Nearest point of a segment's spline to x: nearest knot, then golden-section
/// refinement over the two adjacent intervals.
[[nodiscard]] Approach nearest_on_segment(const SlowFastSystem& system, const TrajectorySegment& segment,
                                          const Vector& x);

/// Nearest approach between knots first..last of an orbit and a segment spline.
[[nodiscard]] Approach nearest_approach(const SlowFastSystem& system, const ivp::Orbit& orbit,
                                        const TrajectorySegment& segment, int first = 0, int last = -1);

/// Nearest approach between knots of two orbits, refined on the dense output
/// of the second orbit around its nearest knot.
[[nodiscard]] Approach nearest_approach(const ivp::Orbit& a, const ivp::Orbit& b, int first = 0, int last = -1);

/// Regula falsi with the Illinois modification on a sign-changing bracket.
[[nodiscard]] double illinois(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                              double tolerance, int max_iterations = 100);

[[nodiscard]] double golden_minimum(const std::function<double(double)>& f, double a, double b, int iterations = 60);

}  // namespace smst::experiments
