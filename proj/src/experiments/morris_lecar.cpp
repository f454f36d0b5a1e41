#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "smst/experiments/experiments.hpp"
#include "smst/experiments/support.hpp"
#include "common.hpp"

namespace smst::experiments {

namespace {

using detail::kNaN;
using detail::median;
using detail::shadowing_options;

struct SlowManifold {
    SlowFastSystem system;
    TrajectorySegment segment;
    SolverReport report;
    ShadowingReport shadowing;
};

/// S^s on a v-uniform mesh of the saddle branch, seeded on the critical curve
/// with times from the reduced flow, then checked against the true flow.
SlowManifold ml_slow_manifold(const Json& config, double eps) {
    auto params = ml_params(config);
    params.epsilon = eps;
    const auto system = models::ml_system(params);
    const auto vs = linspace(get_double(config, "ml_mesh.v_min"), get_double(config, "ml_mesh.v_max"),
                             get_int(config, "ml_mesh.points"));
    const double k = params.k;
    const auto times = chart_times(vs, [k](double v) { return (k - v) / models::ml_critical_current_slope(v); });
    std::vector<Vector> states;
    for (double v : vs) states.push_back(models::ml_critical_curve(v));
    auto solve = smst_compute(system, TrajectorySegment(Mesh(times), std::move(states)), smst_options(config));
    if (!solve.report.converged)
        fail(ErrorKind::newton_failure, "slow manifold solve did not converge: " + solve.report.message);
    auto shadow = require_shadowing(system, solve.segment, shadowing_options(config), ivp_options(config),
                                    "Morris-Lecar slow manifold");
    return {system, std::move(solve.segment), std::move(solve.report), shadow};
}

void store_manifold(ExperimentResult& result, const SlowManifold& s, const std::string& table_name,
                    double eps = kNaN) {
    Table t(table_name, {"epsilon [1]", "t [slow time]", "v [1]", "w [1]", "I [1]"});
    for (int j = 0; j < s.segment.points(); ++j) {
        const auto& z = s.segment.z(j);
        t.add({std::isnan(eps) ? s.system.epsilon() : eps, s.segment.t(j), z[0], z[1], z[2]});
    }
    result.add_table(std::move(t));
}

/// Fast-coordinate distance from z to the segment at the same applied current,
/// by linear interpolation between knots (I is monotone along S). Outside the
/// current range of S the nearer endpoint is used.
double distance_at_current(const TrajectorySegment& s, const Vector& z) {
    const double current = z[2];
    const int last = s.points() - 1;
    for (int j = 0; j < last; ++j) {
        const double a = s.z(j)[2];
        const double b = s.z(j + 1)[2];
        if ((current - a) * (current - b) <= 0.0 && a != b) {
            const double theta = (current - a) / (b - a);
            const Vector p = s.z(j) + theta * (s.z(j + 1) - s.z(j));
            return (z.head(2) - p.head(2)).norm();
        }
    }
    const bool near_front = std::abs(current - s.z(0)[2]) < std::abs(current - s.z(last)[2]);
    return (z.head(2) - s.z(near_front ? 0 : last).head(2)).norm();
}

int nearest_knot_in_v(const TrajectorySegment& s, double v) {
    int best = 0;
    for (int j = 1; j < s.points(); ++j)
        if (std::abs(s.z(j)[0] - v) < std::abs(s.z(best)[0] - v)) best = j;
    return best;
}

/// Appends at most `max_rows` evenly spaced knots of an orbit (first and last included).
void append_orbit(Table& t, const std::vector<double>& prefix, const ivp::Orbit& orbit, int max_rows = 400) {
    for (int i : detail::thinned(orbit.knots(), max_rows)) {
        auto row = prefix;
        row.push_back(orbit.t(i));
        for (int c = 0; c < 3; ++c) row.push_back(orbit.z(i)[c]);
        t.add(std::move(row));
    }
}

struct Departure {
    int sign = 0;
    double time = kNaN;
    bool censored = true;
    Vector point;
    ivp::Orbit orbit{0.0, Vector::Zero(3)};
};

Departure departure(const SlowManifold& s, const Vector& base, const Vector& dir, double displacement, double span,
                    double threshold, const ivp::IvpOptions& opts) {
    ivp::Event event{[&](double, const Vector& z) { return distance_at_current(s.segment, z) - threshold; },
                     ivp::Direction::either, 1e-12};
    Departure d;
    try {
        auto hit = ivp::integrate_to_event(ivp::field_of(s.system), base + displacement * dir, 0.0, span, event, opts);
        d.sign = (hit.point - base).head(2).dot(dir.head(2)) > 0.0 ? 1 : -1;
        d.time = std::abs(hit.time);
        d.censored = false;
        d.point = hit.point;
        d.orbit = std::move(hit.orbit);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_crossing && e.kind() != ErrorKind::left_domain) throw;
    }
    return d;
}

void record_solve(ExperimentResult& result, const SlowManifold& s, const std::string& key) {
    Json j = to_json(s.report);
    j["shadowing"] = detail::to_json(s.shadowing);
    result.provenance[key] = j;
}

// ---------------------------------------------------------------------------
// Section traces of the unstable and stable manifolds of S.

struct Hit {
    int branch = 0;  // 0: unstable +, 1: unstable -, 2: stable, 3: control
    int index = -1;
    double launch_t = 0.0;
    double launch_v = 0.0;
    bool hit = false;
    Vector point = Vector::Constant(3, kNaN);
    double time = kNaN;
};

struct Traces {
    std::vector<Hit> unstable;
    std::vector<Hit> stable;
    Hit control;
    /// Refined stable hits near the unstable cluster, ordered by launch time.
    std::vector<Hit> local;
    Vector cluster_center = Vector::Constant(2, kNaN);
    std::vector<int> cluster;
};

Hit launch(const SlowManifold& s, const ivp::Section& section, double t, int branch, int index, const Vector& dir,
           double displacement, double t_max, const ivp::IvpOptions& opts) {
    const Vector base = spline_at(s.system, s.segment, t);
    Hit h;
    h.branch = branch;
    h.index = index;
    h.launch_t = t;
    h.launch_v = base[0];
    try {
        auto e = ivp::integrate_to_section(s.system, base + displacement * dir, section, opts, t_max);
        h.hit = true;
        h.point = e.point;
        h.time = e.time;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_crossing && e.kind() != ErrorKind::left_domain &&
            e.kind() != ErrorKind::stiffness)
            throw;
    }
    return h;
}

/// Indices of unstable hits within `radius` of the hit with the most such neighbours.
void find_cluster(Traces& tr, double radius) {
    int best = -1;
    int best_count = 0;
    for (size_t i = 0; i < tr.unstable.size(); ++i) {
        if (!tr.unstable[i].hit) continue;
        int count = 0;
        for (const auto& o : tr.unstable)
            if (o.hit && (o.point.head(2) - tr.unstable[i].point.head(2)).norm() <= radius) ++count;
        if (count > best_count) {
            best_count = count;
            best = static_cast<int>(i);
        }
    }
    tr.cluster.clear();
    if (best < 0) return;
    auto gather = [&](const Vector& center) {
        std::vector<int> members;
        for (size_t i = 0; i < tr.unstable.size(); ++i)
            if (tr.unstable[i].hit && (tr.unstable[i].point.head(2) - center).norm() <= radius)
                members.push_back(static_cast<int>(i));
        return members;
    };
    // Re-centre once on the coordinate-wise median of the members.
    const auto first = gather(tr.unstable[static_cast<size_t>(best)].point.head(2));
    std::vector<double> vs;
    std::vector<double> ws;
    for (int i : first) {
        vs.push_back(tr.unstable[static_cast<size_t>(i)].point[0]);
        ws.push_back(tr.unstable[static_cast<size_t>(i)].point[1]);
    }
    tr.cluster_center = Vector{{median(vs), median(ws)}};
    tr.cluster = gather(tr.cluster_center);
}

Traces section_traces(const SlowManifold& s, const Json& config, int refine_points) {
    const int n = get_int(config, "sweep.points");
    const auto range = get_doubles(config, "sweep.launch_range");
    const double disp = get_double(config, "sweep.displacement");
    const double sdisp = get_double(config, "sweep.stable_displacement");
    const int scan = get_int(config, "sweep.stable_scan");
    const double window = get_double(config, "sweep.stable_window");
    const double t_max = get_double(config, "sweep.t_max");
    const double st_max = get_double(config, "sweep.stable_t_max");
    require(n >= 1 && scan >= 2 && refine_points >= 2, "sweep needs >= 1 launch, >= 2 stable scan and refine points");
    require(range.size() == 2 && 0.0 <= range[0] && range[0] < range[1] && range[1] <= 1.0,
            "sweep.launch_range must be two increasing fractions in [0, 1]");
    const auto section = ivp::Section::coordinate(2, 3, get_double(config, "sweep.section_level"),
                                                  direction_from(get_string(config, "sweep.direction")));
    const auto opts = ivp_options(config);
    const int last = s.segment.points() - 1;

    std::vector<int> knots;
    for (int i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.5 * (range[0] + range[1]) : range[0] + (range[1] - range[0]) * i / (n - 1);
        knots.push_back(static_cast<int>(std::lround(frac * last)));
    }

    Traces tr;
    tr.unstable = parallel_map(2 * n, [&](int i) {
        const int j = knots[static_cast<size_t>(i / 2)];
        const double sign = i % 2 == 0 ? 1.0 : -1.0;
        const auto dirs = strong_directions(s.system, s.segment.z(j));
        return launch(s, section, s.segment.t(j), i % 2, j, dirs.unstable_vectors[0], sign * disp, t_max, opts);
    });
    const int mid = knots[knots.size() / 2];
    tr.control = launch(s, section, s.segment.t(mid), 3, mid, Vector::Zero(3), 0.0, t_max, opts);

    const double ta = s.segment.t(static_cast<int>(std::lround(range[0] * last)));
    const double tb = s.segment.t(static_cast<int>(std::lround(range[1] * last)));
    auto stable_at = [&](double t, int index) {
        const auto dirs = strong_directions(s.system, spline_at(s.system, s.segment, t));
        return launch(s, section, t, 2, index, dirs.stable_vectors[0], sdisp, -st_max, opts);
    };
    tr.stable = parallel_map(scan, [&](int i) { return stable_at(ta + (tb - ta) * i / (scan - 1), i); });

    find_cluster(tr, get_double(config, "sweep.cluster_radius"));
    if (tr.cluster.empty()) return tr;

    // The coarse stable trace winds through the section; refine around the
    // crossing of v_cluster whose interpolated w is nearest the cluster.
    const double vc = tr.cluster_center[0];
    const double wc = tr.cluster_center[1];
    double best_t = kNaN;
    double best_dw = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < tr.stable.size(); ++i) {
        const auto& a = tr.stable[i];
        const auto& b = tr.stable[i + 1];
        if (!a.hit || !b.hit) continue;
        if ((a.point[0] - vc) * (b.point[0] - vc) > 0.0 || a.point[0] == b.point[0]) continue;
        const double theta = (vc - a.point[0]) / (b.point[0] - a.point[0]);
        const double w = a.point[1] + theta * (b.point[1] - a.point[1]);
        if (std::abs(w - wc) < best_dw) {
            best_dw = std::abs(w - wc);
            best_t = a.launch_t + theta * (b.launch_t - a.launch_t);
        }
    }
    if (std::isnan(best_t)) return tr;
    tr.local = parallel_map(refine_points, [&](int i) {
        return stable_at(best_t - window + 2.0 * window * i / (refine_points - 1), scan + i);
    });
    std::erase_if(tr.local, [](const Hit& h) { return !h.hit; });
    return tr;
}

/// Piecewise-linear w(v) through the refined stable hits; NaN outside their range.
double stable_w_at(const std::vector<Hit>& local, double v) {
    for (size_t i = 0; i + 1 < local.size(); ++i) {
        const double a = local[i].point[0];
        const double b = local[i + 1].point[0];
        if ((v - a) * (v - b) <= 0.0 && a != b) {
            const double theta = (v - a) / (b - a);
            return local[i].point[1] + theta * (local[i + 1].point[1] - local[i].point[1]);
        }
    }
    return kNaN;
}

Table hits_table(const std::string& name) {
    return Table(name, {"epsilon [1]", "branch [code]", "launch_index [1]", "launch_t [slow time]", "launch_v [1]",
                        "hit [bool]", "v [1]", "w [1]", "I [1]", "time [slow time]"});
}

void add_hit(Table& t, double eps, const Hit& h) {
    t.add({eps, double(h.branch), double(h.index), h.launch_t, h.launch_v, h.hit ? 1.0 : 0.0, h.point[0], h.point[1],
           h.point[2], h.time});
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentResult bracketing_test(const Json& config) {
    const auto s = ml_slow_manifold(config, ml_params(config).epsilon);
    const auto distances = get_doubles(config, "bracketing.distances");
    const auto explicit_point = get_doubles(config, "bracketing.base_point");
    const double span = get_double(config, "bracketing.t_span");
    const double threshold = get_double(config, "bracketing.departure");
    require(!distances.empty() && span > 0.0 && threshold > 0.0, "bracketing needs distances, t_span > 0, departure > 0");
    for (double d : distances) require(d > 0.0, "bracketing distances must be positive");
    require(explicit_point.empty() || explicit_point.size() == 3, "bracketing.base_point must be empty or (v, w, I)");
    const auto opts = ivp_options(config);

    ExperimentResult result;
    result.name = "bracketing_test";
    record_solve(result, s, "slow_manifold");

    Vector base;
    if (explicit_point.empty())
        base = s.segment.z(nearest_knot_in_v(s.segment, get_double(config, "bracketing.base_v")));
    else
        base = Eigen::Map<const Vector>(explicit_point.data(), 3);
    const auto dirs = strong_directions(s.system, base);
    const Vector& unstable = dirs.unstable_vectors[0];
    const Vector& stable = dirs.stable_vectors[0];

    const int rungs = static_cast<int>(distances.size());
    // Task i: rung i / 4, kind (i / 2) % 2 (0 forward unstable, 1 backward stable), side i % 2.
    const auto runs = parallel_map(4 * rungs, [&](int i) {
        const double d = distances[static_cast<size_t>(i / 4)];
        const bool forward = (i / 2) % 2 == 0;
        const double side = i % 2 == 0 ? 1.0 : -1.0;
        return departure(s, base, forward ? unstable : stable, side * d, forward ? span : -span, threshold, opts);
    });

    Table ladder("ladder", {"distance [1]", "kind [code]", "sign_plus [1]", "sign_minus [1]",
                            "time_plus [slow time]", "time_minus [slow time]", "opposite [bool]", "censored [bool]"});
    Table fans("trajectories", {"distance [1]", "kind [code]", "side [1]", "t [slow time]", "v [1]", "w [1]", "I [1]"});
    double largest_failed = 0.0;
    for (int r = 0; r < rungs; ++r) {
        for (int kind = 0; kind < 2; ++kind) {
            const auto& plus = runs[static_cast<size_t>(4 * r + 2 * kind)];
            const auto& minus = runs[static_cast<size_t>(4 * r + 2 * kind + 1)];
            const bool censored = plus.censored || minus.censored;
            const bool opposite = !censored && plus.sign != minus.sign;
            ladder.add({distances[static_cast<size_t>(r)], double(kind), double(plus.sign), double(minus.sign),
                        plus.time, minus.time, opposite ? 1.0 : 0.0, censored ? 1.0 : 0.0});
            if (!opposite) largest_failed = std::max(largest_failed, distances[static_cast<size_t>(r)]);
            if (!plus.censored) append_orbit(fans, {distances[static_cast<size_t>(r)], double(kind), 1.0}, plus.orbit);
            if (!minus.censored)
                append_orbit(fans, {distances[static_cast<size_t>(r)], double(kind), -1.0}, minus.orbit);
        }
    }

    // Smallest distance down to which every larger rung passes.
    std::vector<size_t> order(distances.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return distances[a] > distances[b]; });
    double floor = kNaN;
    for (size_t i : order) {
        const bool pass = ladder.at(2 * i, "opposite") > 0.5 && ladder.at(2 * i + 1, "opposite") > 0.5;
        if (!pass) break;
        floor = distances[i];
    }

    result.add_table(std::move(ladder));
    result.add_table(std::move(fans));
    store_manifold(result, s, "slow_manifold");
    result.set_metric("base_v", base[0]);
    result.set_metric("base_w", base[1]);
    result.set_metric("base_I", base[2]);
    result.set_metric("unstable_eigenvalue", dirs.unstable_values[0].real());
    result.set_metric("stable_eigenvalue", dirs.stable_values[0].real());
    result.set_metric("newton_iterations", s.report.iterations);
    result.set_metric("newton_residual", s.report.final_residual);
    result.set_metric("shadowing_max_deviation", s.shadowing.max_deviation);
    result.set_metric("largest_failed_distance", largest_failed);
    if (std::isfinite(floor)) result.set_metric("smallest_passing_distance", floor);
    return result;
}

ExperimentResult manifold_sweep(const Json& config) {
    const double eps = ml_params(config).epsilon;
    const auto s = ml_slow_manifold(config, eps);
    const auto tr = section_traces(s, config, get_int(config, "sweep.stable_points"));

    ExperimentResult result;
    result.name = "manifold_sweep";
    record_solve(result, s, "slow_manifold");

    Table hits = hits_table("hits");
    Table umap("u_map", {"launch_v [1]", "side [1]", "final_v [1]", "final_w [1]", "in_cluster [bool]"});
    int misses = 0;
    for (size_t i = 0; i < tr.unstable.size(); ++i) {
        const auto& h = tr.unstable[i];
        add_hit(hits, eps, h);
        if (!h.hit) {
            ++misses;
            continue;
        }
        const bool in = std::find(tr.cluster.begin(), tr.cluster.end(), static_cast<int>(i)) != tr.cluster.end();
        umap.add({h.launch_v, h.branch == 0 ? 1.0 : -1.0, h.point[0], h.point[1], in ? 1.0 : 0.0});
    }
    for (const auto& h : tr.stable) {
        add_hit(hits, eps, h);
        if (!h.hit) ++misses;
    }
    for (const auto& h : tr.local) add_hit(hits, eps, h);
    add_hit(hits, eps, tr.control);

    double longest_unstable = 0.0;
    for (const auto& h : tr.unstable)
        if (h.hit) longest_unstable = std::max(longest_unstable, h.time);

    result.add_table(std::move(hits));
    result.add_table(std::move(umap));
    store_manifold(result, s, "slow_manifold");
    result.set_metric("newton_iterations", s.report.iterations);
    result.set_metric("shadowing_max_deviation", s.shadowing.max_deviation);
    result.set_metric("misses", misses);
    result.set_metric("cluster_size", static_cast<double>(tr.cluster.size()));
    if (!tr.cluster.empty()) {
        result.set_metric("cluster_v", tr.cluster_center[0]);
        result.set_metric("cluster_w", tr.cluster_center[1]);
    }
    result.set_metric("longest_unstable_time", longest_unstable);
    if (tr.control.hit) result.set_metric("control_time", tr.control.time);
    return result;
}

ExperimentResult section_scan(const Json& config) {
    auto epsilons = get_doubles(config, "scan.epsilons");
    if (epsilons.empty()) epsilons.push_back(ml_params(config).epsilon);
    const int refine = get_int(config, "scan.stable_points");

    ExperimentResult result;
    result.name = "section_scan";
    Table gaps("gaps", {"epsilon [1]", "launch_index [1]", "side [1]", "v [1]", "w [1]", "stable_w [1]", "gap [1]",
                        "in_cluster [bool]"});
    Table summary("scan", {"epsilon [1]", "gap [1]", "min_abs_gap [1]", "cluster_size [1]", "gaps [1]"});
    Table hits = hits_table("hits");
    Table manifolds("slow_manifold", {"epsilon [1]", "t [slow time]", "v [1]", "w [1]", "I [1]"});

    for (size_t e = 0; e < epsilons.size(); ++e) {
        const double eps = epsilons[e];
        const auto s = ml_slow_manifold(config, eps);
        const auto tr = section_traces(s, config, refine);
        record_solve(result, s, "slow_manifold_" + std::to_string(e));
        if (tr.cluster.empty() || tr.local.size() < 2)
            fail(ErrorKind::no_crossing, "too few stable-manifold hits near the unstable cluster at eps = " +
                                             std::to_string(eps));
        std::vector<double> all;
        std::vector<double> clustered;
        for (size_t i = 0; i < tr.unstable.size(); ++i) {
            const auto& h = tr.unstable[i];
            add_hit(hits, eps, h);
            if (!h.hit) continue;
            const double ws = stable_w_at(tr.local, h.point[0]);
            if (std::isnan(ws)) continue;
            const double gap = h.point[1] - ws;
            const bool in = std::find(tr.cluster.begin(), tr.cluster.end(), static_cast<int>(i)) != tr.cluster.end();
            gaps.add({eps, double(h.index), h.branch == 0 ? 1.0 : -1.0, h.point[0], h.point[1], ws, gap,
                      in ? 1.0 : 0.0});
            all.push_back(gap);
            if (in) clustered.push_back(gap);
        }
        for (const auto& h : tr.local) add_hit(hits, eps, h);
        if (all.empty())
            fail(ErrorKind::no_crossing,
                 "no unstable-manifold hit inside the stable trace at eps = " + std::to_string(eps));
        const double representative = median(clustered.empty() ? all : clustered);
        double min_abs = std::numeric_limits<double>::infinity();
        for (double g : all) min_abs = std::min(min_abs, std::abs(g));
        summary.add({eps, representative, min_abs, static_cast<double>(tr.cluster.size()),
                     static_cast<double>(all.size())});
        for (int j = 0; j < s.segment.points(); ++j) {
            const auto& z = s.segment.z(j);
            manifolds.add({eps, s.segment.t(j), z[0], z[1], z[2]});
        }
        const std::string tag = std::to_string(e);
        result.set_metric("epsilon_" + tag, eps);
        result.set_metric("gap_" + tag, representative);
        result.set_metric("min_abs_gap_" + tag, min_abs);
    }

    bool monotone = true;
    const auto eps_col = summary.values("epsilon");
    const auto gap_col = summary.values("gap");
    for (size_t i = 0; i < eps_col.size(); ++i)
        for (size_t j = 0; j < eps_col.size(); ++j)
            if (eps_col[i] < eps_col[j] && gap_col[i] > gap_col[j]) monotone = false;
    result.add_table(std::move(gaps));
    result.add_table(std::move(summary));
    result.add_table(std::move(hits));
    result.add_table(std::move(manifolds));
    result.set_metric("gap_monotone_in_epsilon", monotone ? 1.0 : 0.0);
    return result;
}

ExperimentResult return_map(const Json& config) {
    const auto system = models::ml_system(ml_params(config));
    const double slope = get_double(config, "return_map.slope");
    const double intercept = get_double(config, "return_map.intercept");
    const double v_min = get_double(config, "return_map.v_min");
    const double v_max = get_double(config, "return_map.v_max");
    const int n = get_int(config, "return_map.points");
    const double level = get_double(config, "return_map.section_level");
    const double t_max = get_double(config, "return_map.t_max");
    const double jump_factor = get_double(config, "return_map.jump_factor");
    require(n >= 1 && v_min <= v_max && t_max > 0.0 && jump_factor > 0.0, "invalid return_map options");
    const auto section =
        ivp::Section::coordinate(2, 3, level, direction_from(get_string(config, "return_map.direction")));
    const auto opts = ivp_options(config);

    struct Return {
        double v0 = 0.0;
        bool returned = false;
        Vector point = Vector::Constant(3, kNaN);
        double time = kNaN;
        int spikes = 0;
    };
    const auto returns = parallel_map(n, [&](int i) {
        Return r;
        r.v0 = n == 1 ? v_min : v_min + (v_max - v_min) * i / (n - 1);
        const Vector z0{{r.v0, slope * r.v0 + intercept, level}};
        try {
            auto hit = ivp::integrate_to_section(system, z0, section, opts, t_max);
            r.returned = true;
            r.point = hit.point;
            r.time = hit.time;
            const auto& orbit = hit.orbit;
            for (int k = 1; k + 1 < orbit.knots(); ++k) {
                const double v = orbit.z(k)[0];
                if (v > 0.0 && v > orbit.z(k - 1)[0] && v >= orbit.z(k + 1)[0]) ++r.spikes;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::no_crossing && e.kind() != ErrorKind::left_domain) throw;
        }
        return r;
    });

    Table map("return_map", {"v_initial [1]", "returned [bool]", "v_final [1]", "w_final [1]", "spikes [1]",
                             "return_time [slow time]", "steep_after [bool]", "jump_after [bool]"});
    std::vector<size_t> ok;
    for (size_t i = 0; i < returns.size(); ++i)
        if (returns[i].returned) ok.push_back(i);
    std::vector<double> adjacent;
    for (size_t i = 0; i + 1 < ok.size(); ++i)
        adjacent.push_back(std::abs(returns[ok[i + 1]].point[0] - returns[ok[i]].point[0]));
    // Gaps above the limit are steep; a run of consecutive steep gaps is one
    // apparent jump, placed at its largest gap.
    std::vector<bool> steep_after(returns.size(), false);
    std::vector<bool> jump_after(returns.size(), false);
    std::vector<size_t> jumps;
    if (!adjacent.empty()) {
        const double limit = jump_factor * median(adjacent);
        for (size_t i = 0; i < adjacent.size();) {
            if (adjacent[i] <= limit) {
                ++i;
                continue;
            }
            size_t widest = i;
            for (; i < adjacent.size() && adjacent[i] > limit; ++i) {
                steep_after[ok[i]] = true;
                if (adjacent[i] > adjacent[widest]) widest = i;
            }
            jump_after[ok[widest]] = true;
            jumps.push_back(widest);
        }
    }
    double v_low = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < returns.size(); ++i) {
        const auto& r = returns[i];
        map.add({r.v0, r.returned ? 1.0 : 0.0, r.point[0], r.point[1], double(r.spikes), r.time,
                 steep_after[i] ? 1.0 : 0.0, jump_after[i] ? 1.0 : 0.0});
        if (r.returned) v_low = std::min(v_low, r.point[0]);
    }

    // Spike counts inside and outside the first and last jump, when uniform.
    std::map<int, int> inside;
    std::map<int, int> outside;
    if (jumps.size() >= 2) {
        for (size_t i = 0; i < ok.size(); ++i) {
            const bool in = i > jumps.front() && i <= jumps.back();
            (in ? inside : outside)[returns[ok[i]].spikes]++;
        }
    }
    ExperimentResult result;
    result.name = "return_map";
    result.add_table(std::move(map));
    result.set_metric("points", n);
    result.set_metric("returned", static_cast<double>(ok.size()));
    result.set_metric("jumps", static_cast<double>(jumps.size()));
    if (std::isfinite(v_low)) result.set_metric("min_return_v", v_low);
    if (inside.size() == 1) result.set_metric("spikes_between_jumps", inside.begin()->first);
    if (outside.size() == 1) result.set_metric("spikes_outside_jumps", outside.begin()->first);
    return result;
}

}  // namespace smst::experiments
