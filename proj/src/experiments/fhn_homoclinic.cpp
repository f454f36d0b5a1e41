#include <cmath>
#include <limits>

#include "common.hpp"
#include "smst/experiments/experiments.hpp"

namespace smst::experiments {

namespace {

using detail::kNaN;

struct Setup {
    models::FhnParams params;
    SlowFastSystem system;
    ivp::IvpOptions ivp;
    SmstOptions smst;
    ShadowingOptions shadowing;
    int points = 0;
    Vector q;
};

struct Manifold {
    TrajectorySegment segment;
    SolverReport report;
    ShadowingReport shadowing;
};

/// Chart-uniform candidate on the branch from x1 = a to b. Intervals whose
/// time step exceeds `max_step_ratio` times the median are split, which grades
/// the mesh where the reduced flow slows down near q.
TrajectorySegment branch_candidate(const Setup& s, double a, double b, int points, double max_step_ratio = 4.0) {
    const auto params = s.params;
    const auto rate = [params](double x) { return models::fhn_chart_rate(x, params); };
    auto xs = linspace(a, b, points);
    auto ts = chart_times(xs, rate);
    for (int pass = 0; pass < 40; ++pass) {
        std::vector<double> steps;
        for (size_t i = 0; i + 1 < ts.size(); ++i) steps.push_back(std::abs(ts[i + 1] - ts[i]));
        const double cap = max_step_ratio * detail::median(steps);
        std::vector<double> refined{xs.front()};
        for (size_t i = 0; i + 1 < xs.size(); ++i) {
            if (steps[i] > cap) refined.push_back(0.5 * (xs[i] + xs[i + 1]));
            refined.push_back(xs[i + 1]);
        }
        if (refined.size() == xs.size()) break;
        xs = std::move(refined);
        ts = chart_times(xs, rate);
    }
    std::vector<Vector> zs;
    for (double x : xs) zs.push_back(models::fhn_critical(x, params.p));
    return TrajectorySegment(Mesh(ts), std::move(zs));
}

Manifold solve_branch(const Setup& s, const TrajectorySegment& candidate, const std::string& label,
                      std::optional<std::pair<BoundaryManifold, BoundaryManifold>> boundaries = std::nullopt) {
    auto solve = smst_compute(s.system, candidate, s.smst, std::move(boundaries));
    if (!solve.report.converged)
        fail(ErrorKind::newton_failure, label + " did not converge: " + solve.report.message);
    auto shadow = require_shadowing(s.system, solve.segment, s.shadowing, s.ivp, label);
    return {std::move(solve.segment), std::move(solve.report), shadow};
}

/// Unit unstable eigenvector of the full Jacobian at q with positive x1 component.
Vector equilibrium_unstable_direction(const Setup& s) {
    Eigen::EigenSolver<Matrix> es(assemble_jacobian(s.system, s.q));
    int iu = -1;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i].real() > 0.0 && std::abs(es.eigenvalues()[i].imag()) == 0.0) iu = i;
    require(iu >= 0, "equilibrium has no real unstable eigenvalue");
    Vector e = es.eigenvectors().col(iu).real().normalized();
    return e[0] < 0.0 ? Vector(-e) : e;
}

/// Strong-direction vector at a point of a segment, oriented by the sign of its x1 component.
Vector oriented(const StrongDirections& d, bool stable, double x1_sign) {
    Vector e = stable ? d.stable_vectors[0] : d.unstable_vectors[0];
    return e[0] * x1_sign < 0.0 ? Vector(-e) : e;
}

/// Maximum distance of (x1, x2) from the critical manifold at the same y over
/// the middle `fraction` of the knots [first, last].
double tracking_deviation(const Setup& s, const TrajectorySegment& seg, int first, int last, double fraction) {
    const int count = last - first;
    const int trim = static_cast<int>(std::floor(0.5 * (1.0 - fraction) * count));
    double worst = 0.0;
    for (int j = first + trim; j <= last - trim; ++j) {
        const Vector& z = seg.z(j);
        const Vector x = critical_point(s.system, z.tail(1), z.head(2));
        worst = std::max(worst, (z.head(2) - x).norm());
    }
    return worst;
}

Table orbit_table() {
    return Table("orbit", {"leg [code]", "t [slow time]", "x1 [1]", "x2 [1]", "y [1]"});
}

void add_state(Table& t, int leg, double time, const Vector& z) { t.add({double(leg), time, z[0], z[1], z[2]}); }

void add_orbit_knots(Table& t, int leg, const ivp::Orbit& orbit, int first, int last, bool reversed = false) {
    if (!reversed)
        for (int i = first; i <= last; ++i) add_state(t, leg, orbit.t(i), orbit.z(i));
    else
        for (int i = last; i >= first; --i) add_state(t, leg, orbit.t(i), orbit.z(i));
}

Table manifolds_table(std::initializer_list<std::pair<int, const TrajectorySegment*>> legs) {
    Table t("slow_manifolds", {"branch [code]", "t [slow time]", "x1 [1]", "x2 [1]", "y [1]"});
    for (const auto& [code, seg] : legs)
        for (int j = 0; j < seg->points(); ++j) add_state(t, code, seg->t(j), seg->z(j));
    return t;
}

int first_crossing_after(const ivp::Orbit& orbit, double level, int crossings) {
    int seen = 0;
    for (int i = 1; i < orbit.knots(); ++i)
        if (orbit.z(i - 1)[0] > level && orbit.z(i)[0] <= level && ++seen == crossings) return i;
    return -1;
}

void enforce_gap(const std::string& name, double gap, double limit) {
    if (!(gap <= limit))
        fail(ErrorKind::assembly_failed,
             "junction " + name + " gap " + std::to_string(gap) + " exceeds " + std::to_string(limit));
}

// ---------------------------------------------------------------------------

ExperimentResult fast_wave(const Setup& s, const Json& config) {
    const auto right = get_doubles(config, "homoclinic.right_branch");
    const auto left = get_doubles(config, "homoclinic.left_branch");
    const double join_radius = get_double(config, "homoclinic.join_radius");
    const int fan = get_int(config, "homoclinic.fan_points");
    const double fan_disp = get_double(config, "homoclinic.fan_displacement");
    const double root_tol = get_double(config, "homoclinic.root_tolerance");
    const double limit = get_double(config, "homoclinic.neighbourhood");
    const double t_max = get_double(config, "homoclinic.t_max");
    const double fraction = get_double(config, "homoclinic.tracking_fraction");
    require(right.size() == 2 && left.size() == 2, "branch ranges need two x1 values");
    require(fan >= 2, "homoclinic.fan_points must be >= 2");

    ExperimentResult result;
    result.name = "fhn_homoclinic";

    // W^u(q) up to the far side of the right branch.
    const Vector eu = equilibrium_unstable_direction(s);
    const ivp::Event beyond{[](double, const Vector& z) { return z[0] - 1.3; }, ivp::Direction::increasing, 1e-12};
    const auto wq = ivp::integrate_to_event(ivp::field_of(s.system), s.q + get_double(config, "homoclinic.q_displacement") * eu,
                                            0.0, t_max, beyond, s.ivp)
                        .orbit;

    // Entry of W^u(q) into a neighbourhood of S_r, then S_r from there.
    const auto sr_full = solve_branch(s, branch_candidate(s, right[0], right[1], s.points), "right slow manifold");
    int entry = -1;
    for (int i = 0; i < wq.knots() && entry < 0; ++i)
        if (nearest_on_segment(s.system, sr_full.segment, wq.z(i)).distance <= join_radius) entry = i;
    if (entry < 0) fail(ErrorKind::assembly_failed, "W^u(q) does not enter the neighbourhood of S_r");
    const Vector p1 = wq.z(entry);
    double xa = right[0];
    for (int it = 0; it < 60; ++it) {
        const double step = (models::fhn_critical(xa, s.params.p)[2] - p1[2]) / models::fhn_cubic_slope(xa);
        xa -= step;
        if (std::abs(step) <= 1e-15) break;
    }
    const auto cand = branch_candidate(s, xa, right[1], s.points);
    const auto sr = solve_branch(s, cand, "right slow manifold leg",
                                 default_boundary_manifolds(s.system, p1, cand.z(cand.points() - 1)));
    const auto sl = solve_branch(s, branch_candidate(s, left[0], left[1], s.points), "left slow manifold");
    const auto& Sr = sr.segment;
    const auto& Sl = sl.segment;

    // Traces of W^u(S_r) and W^s(S_l) on the section.
    const auto section = ivp::Section::coordinate(0, 3, models::fhn_section_level(), ivp::Direction::decreasing);
    auto launch_u = [&](double tau) {
        const Vector z = spline_at(s.system, Sr, tau);
        return ivp::integrate_to_section(s.system, z + fan_disp * oriented(strong_directions(s.system, z), false, -1.0),
                                         section, s.ivp, 1.0);
    };
    auto launch_s = [&](double sigma) {
        const Vector z = spline_at(s.system, Sl, sigma);
        return ivp::integrate_to_section(s.system, z + fan_disp * oriented(strong_directions(s.system, z), true, 1.0),
                                         section, s.ivp, -1.0);
    };
    struct TracePoint {
        double param = kNaN;
        bool hit = false;
        Vector point = Vector::Constant(3, kNaN);
    };
    auto fan_of = [&](const TrajectorySegment& seg, auto&& launcher) {
        return parallel_map(fan + 1, [&](int i) {
            TracePoint p;
            p.param = seg.t(0) + (seg.t(seg.points() - 1) - seg.t(0)) * i / fan;
            try {
                p.point = launcher(p.param).point;
                p.hit = true;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::no_crossing && e.kind() != ErrorKind::left_domain) throw;
            }
            return p;
        });
    };
    const auto u_fan = fan_of(Sr, launch_u);
    const auto s_fan = fan_of(Sl, launch_s);

    Table traces("traces", {"kind [code]", "parameter [slow time]", "hit [bool]", "x2 [1]", "y [1]"});
    for (const auto& p : u_fan) traces.add({0.0, p.param, p.hit ? 1.0 : 0.0, p.point[1], p.point[2]});
    for (const auto& p : s_fan) traces.add({1.0, p.param, p.hit ? 1.0 : 0.0, p.point[1], p.point[2]});

    // sigma(y): launch point on S_l whose stable trace meets the section at height y.
    auto sigma_at = [&](double y) {
        for (size_t i = 0; i + 1 < s_fan.size(); ++i) {
            const auto& a = s_fan[i];
            const auto& b = s_fan[i + 1];
            if (!a.hit || !b.hit || (a.point[2] - y) * (b.point[2] - y) > 0.0) continue;
            return illinois([&](double sg) { return launch_s(sg).point[2] - y; }, a.param, b.param, a.point[2] - y,
                            b.point[2] - y, 1e-13);
        }
        fail(ErrorKind::no_crossing, "section height outside the W^s(S_l) trace");
    };
    auto delta = [&](double tau) {
        const auto h = launch_u(tau);
        return h.point[1] - launch_s(sigma_at(h.point[2])).point[1];
    };
    const auto deltas = parallel_map(fan + 1, [&](int i) {
        if (!u_fan[static_cast<size_t>(i)].hit) return kNaN;
        try {
            return delta(u_fan[static_cast<size_t>(i)].param);
        } catch (const Error&) {
            return kNaN;
        }
    });
    int bracket = -1;
    for (int i = 0; i < fan && bracket < 0; ++i)
        if (std::isfinite(deltas[i]) && std::isfinite(deltas[i + 1]) && deltas[i] * deltas[i + 1] <= 0.0) bracket = i;
    if (bracket < 0) fail(ErrorKind::no_crossing, "section traces do not intersect (parameters off the homoclinic locus)");
    const double tau = illinois(delta, u_fan[bracket].param, u_fan[bracket + 1].param, deltas[bracket],
                                deltas[bracket + 1], root_tol);
    const auto hu = launch_u(tau);
    const double sigma = sigma_at(hu.point[2]);
    const auto hs = launch_s(sigma);
    const Vector x_su = hu.point;

    // Connection through x_su: backward to S_r and, via the stable launch, forward to S_l.
    const auto gamma_bw = ivp::integrate(s.system, x_su, -hu.time, s.ivp);
    const auto& gamma_fw = hs.orbit;
    const auto j_r = nearest_approach(s.system, gamma_bw, Sr);
    const auto j_l = nearest_approach(s.system, gamma_fw, Sl);

    const auto j1 = nearest_on_segment(s.system, Sr, p1);
    const double gap_start = (wq.z(0) - s.q).norm();
    const double gap_entry = (Sr.z(0) - p1).norm();
    const double gap_section = (x_su - hs.point).norm();
    const double gap_end = (Sl.z(Sl.points() - 1) - s.q).norm();
    Table junctions("junctions", {"junction [code]", "gap [1]"});
    junctions.add({0.0, gap_start});
    junctions.add({1.0, gap_entry});
    junctions.add({2.0, j_r.distance});
    junctions.add({3.0, gap_section});
    junctions.add({4.0, j_l.distance});
    junctions.add({5.0, gap_end});
    for (size_t i = 0; i < junctions.size(); ++i) enforce_gap(std::to_string(i), junctions.at(i, "gap"), limit);

    // Assembly; legs: 0 W^u(q), 1 S_r, 2 gamma_bw reversed, 3 gamma_fw reversed, 4 S_l.
    Table orbit = orbit_table();
    add_orbit_knots(orbit, 0, wq, 0, entry);
    int sr_last = 0;
    while (sr_last + 1 < Sr.points() && Sr.t(sr_last + 1) <= j_r.time) ++sr_last;
    for (int j = 0; j <= sr_last; ++j) add_state(orbit, 1, Sr.t(j), Sr.z(j));
    add_orbit_knots(orbit, 2, gamma_bw, 0, j_r.index, true);
    add_orbit_knots(orbit, 3, gamma_fw, j_l.index, gamma_fw.knots() - 1, true);
    int sl_first = Sl.points() - 1;
    while (sl_first > 0 && Sl.t(sl_first - 1) >= j_l.time) --sl_first;
    for (int j = sl_first; j < Sl.points(); ++j) add_state(orbit, 4, Sl.t(j), Sl.z(j));
    add_state(orbit, 5, 0.0, s.q);

    const double track_r = tracking_deviation(s, Sr, 0, sr_last, fraction);
    const double track_l = tracking_deviation(s, Sl, sl_first, Sl.points() - 1, fraction);

    result.add_table(std::move(orbit));
    result.add_table(std::move(junctions));
    result.add_table(std::move(traces));
    result.add_table(manifolds_table({{0, &sr_full.segment}, {1, &Sr}, {2, &Sl}}));
    result.provenance["right_manifold"] = to_json(sr_full.report);
    result.provenance["right_leg"] = to_json(sr.report);
    result.provenance["left_manifold"] = to_json(sl.report);
    result.provenance["shadowing"] = {{"right_manifold", detail::to_json(sr_full.shadowing)},
                                      {"right_leg", detail::to_json(sr.shadowing)},
                                      {"left_manifold", detail::to_json(sl.shadowing)}};
    result.set_metric("tau", tau);
    result.set_metric("sigma", sigma);
    result.set_metric("x_su_x1", x_su[0]);
    result.set_metric("x_su_x2", x_su[1]);
    result.set_metric("x_su_y", x_su[2]);
    result.set_metric("trace_mismatch", gap_section);
    result.set_metric("entry_distance", j1.distance);
    double worst = 0.0;
    for (double g : result.table("junctions").values("gap")) worst = std::max(worst, g);
    result.set_metric("max_junction_gap", worst);
    result.set_metric("start_distance_to_q", gap_start);
    result.set_metric("end_distance_to_q", gap_end);
    result.set_metric("tracking_right", track_r);
    result.set_metric("tracking_left", track_l);
    result.set_metric("epsilon", s.params.epsilon);
    return result;
}

ExperimentResult slow_wave(const Setup& s, const Json& config) {
    const auto right = get_doubles(config, "homoclinic.right_branch");
    const auto left = get_doubles(config, "homoclinic.left_branch");
    const int fan = get_int(config, "homoclinic.fan_points");
    const double fan_disp = get_double(config, "homoclinic.fan_displacement");
    const double fan_span = get_double(config, "homoclinic.fan_span");
    const double limit = get_double(config, "homoclinic.neighbourhood");
    const double t_max = get_double(config, "homoclinic.t_max");
    const int pulses = get_int(config, "homoclinic.pulses");
    require(right.size() == 2 && left.size() == 2, "branch ranges need two x1 values");
    require(fan >= 2 && fan_span > 0.0 && pulses >= 1, "invalid slow-wave fan or pulse options");

    ExperimentResult result;
    result.name = "fhn_homoclinic";

    const auto sr = solve_branch(s, branch_candidate(s, right[0], right[1], s.points), "right slow manifold");
    const auto sl = solve_branch(s, branch_candidate(s, left[0], left[1], s.points), "left slow manifold");
    const auto& Sl = sl.segment;

    const Vector eu = equilibrium_unstable_direction(s);
    const auto wq =
        ivp::integrate_bounded(s.system, s.q + get_double(config, "homoclinic.q_displacement") * eu, t_max, s.ivp).orbit;
    const int start = first_crossing_after(wq, s.q[0], pulses);
    if (start < 0)
        fail(ErrorKind::assembly_failed, "W^u(q) makes fewer than " + std::to_string(pulses) + " returns past q");

    const auto raw_left = nearest_approach(s.system, wq, Sl, start);
    const auto raw_right = nearest_approach(s.system, wq, sr.segment);

    // Stable fan of S_l, launched backward; closure at its nearest approach to W^u(q).
    auto fan_orbit = [&](double sigma) {
        const Vector z = spline_at(s.system, Sl, sigma);
        const Vector e = oriented(strong_directions(s.system, z), true, 1.0);
        return ivp::integrate_bounded(s.system, z + fan_disp * e, -fan_span, s.ivp).orbit;
    };
    auto closeness = [&](double sigma) {
        const auto orbit = fan_orbit(sigma);
        return nearest_approach(wq, orbit, start).distance;
    };
    const double s0 = Sl.t(0);
    const double s1 = Sl.t(Sl.points() - 1);
    const auto coarse = parallel_map(fan + 1, [&](int i) { return closeness(s0 + (s1 - s0) * i / fan); });
    int best = 0;
    for (int i = 1; i <= fan; ++i)
        if (coarse[i] < coarse[best]) best = i;
    const double lo = s0 + (s1 - s0) * std::max(best - 1, 0) / fan;
    const double hi = s0 + (s1 - s0) * std::min(best + 1, fan) / fan;
    double sigma = golden_minimum(closeness, lo, hi, 40);
    if (closeness(sigma) > coarse[best]) sigma = s0 + (s1 - s0) * best / fan;
    const auto closing = fan_orbit(sigma);
    const auto junction = nearest_approach(wq, closing, start);
    enforce_gap("entry", junction.distance, limit);

    int closing_index = 0;
    for (int i = 0; i < closing.knots(); ++i)
        if (std::abs(closing.t(i) - junction.time) < std::abs(closing.t(closing_index) - junction.time)) closing_index = i;
    const double gap_launch = (closing.z(0) - spline_at(s.system, Sl, sigma)).norm();
    const double gap_end = (Sl.z(Sl.points() - 1) - s.q).norm();
    Table junctions("junctions", {"junction [code]", "gap [1]"});
    junctions.add({0.0, (wq.z(0) - s.q).norm()});
    junctions.add({1.0, junction.distance});
    junctions.add({2.0, gap_launch});
    junctions.add({3.0, gap_end});
    for (size_t i = 0; i < junctions.size(); ++i) enforce_gap(std::to_string(i), junctions.at(i, "gap"), limit);

    // Legs: 0 W^u(q), 1 stable fan trajectory (forward in time), 4 S_l, 5 q.
    Table orbit = orbit_table();
    add_orbit_knots(orbit, 0, wq, 0, junction.index);
    add_orbit_knots(orbit, 1, closing, 0, closing_index, true);
    int sl_first = Sl.points() - 1;
    while (sl_first > 0 && Sl.t(sl_first - 1) >= sigma) --sl_first;
    for (int j = sl_first; j < Sl.points(); ++j) add_state(orbit, 4, Sl.t(j), Sl.z(j));
    add_state(orbit, 5, 0.0, s.q);

    // Distances of the excursion (legs 0 and 1) from both outer sheets.
    double to_right = std::numeric_limits<double>::infinity();
    double to_left = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < orbit.size(); ++r) {
        if (orbit.at(r, "leg") > 1.5) break;
        const Vector z{{orbit.at(r, "x1"), orbit.at(r, "x2"), orbit.at(r, "y")}};
        to_right = std::min(to_right, nearest_on_segment(s.system, sr.segment, z).distance);
        to_left = std::min(to_left, nearest_on_segment(s.system, Sl, z).distance);
    }

    result.add_table(std::move(orbit));
    result.add_table(std::move(junctions));
    Table fan_table("fan", {"sigma [slow time]", "distance [1]"});
    for (int i = 0; i <= fan; ++i) fan_table.add({s0 + (s1 - s0) * i / fan, coarse[i]});
    result.add_table(std::move(fan_table));
    result.add_table(manifolds_table({{0, &sr.segment}, {2, &Sl}}));
    result.provenance["right_manifold"] = to_json(sr.report);
    result.provenance["left_manifold"] = to_json(sl.report);
    result.provenance["shadowing"] = {{"right_manifold", detail::to_json(sr.shadowing)},
                                      {"left_manifold", detail::to_json(sl.shadowing)}};
    result.set_metric("sigma", sigma);
    result.set_metric("entry_distance", junction.distance);
    result.set_metric("unstable_min_distance_right", raw_right.distance);
    result.set_metric("unstable_min_distance_left", raw_left.distance);
    result.set_metric("orbit_min_distance_right", to_right);
    result.set_metric("orbit_min_distance_left", to_left);
    double worst = 0.0;
    for (double g : result.table("junctions").values("gap")) worst = std::max(worst, g);
    result.set_metric("max_junction_gap", worst);
    result.set_metric("end_distance_to_q", gap_end);
    result.set_metric("epsilon", s.params.epsilon);
    return result;
}

}  // namespace

ExperimentResult fhn_homoclinic(const Json& config) {
    Setup s{fhn_params(config), models::fhn_system(fhn_params(config)), ivp_options(config), smst_options(config),
            detail::shadowing_options(config), get_int(config, "homoclinic.points"), Vector()};
    require(s.points >= 2, "homoclinic.points must be >= 2");
    s.q = models::fhn_equilibrium(s.params.p);
    const auto wave = get_string(config, "homoclinic.wave");
    if (wave == "fast") return fast_wave(s, config);
    if (wave == "slow") return slow_wave(s, config);
    fail(ErrorKind::configuration, "homoclinic.wave must be \"fast\" or \"slow\", got \"" + wave + "\"");
}

}  // namespace smst::experiments
