// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance NAME...    run the named criteria
//   acceptance --list     print the criterion names
//
// Exit status is the number of failed criteria (capped at 1 for ctest).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smst/experiments/experiments.hpp"
#include "smst/experiments/support.hpp"

using namespace smst;
using namespace smst::experiments;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

struct Criterion {
    std::string name;
    double runtime_limit_s;
    std::function<Outcome()> check;
};

// Tolerances.
constexpr double kRecurrenceTol = 1e-10;
constexpr double kSlowManifoldTol = 1e-10;
constexpr double kRhoBound = 0.0015;
constexpr int kRhoSamples = 50;
constexpr double kOrderLow = 3.3;
constexpr double kOrderHigh = 4.5;
constexpr int kNewtonMaxIterations = 6;
constexpr double kNewtonResidual = 1e-12;
constexpr int kNewtonMeshPoints = 200;
constexpr double kBracketFloor = 1e-9;
constexpr double kGapContrast = 10.0;
constexpr int kReturnJumps = 2;
constexpr int kSpikesBetween = 3;
constexpr int kSpikesOutside = 2;
constexpr double kReturnVLow = 0.0070;
constexpr double kReturnVHigh = 0.0076;
constexpr double kJunctionGap = 1e-3;
constexpr double kEndpointDistance = 1e-3;
constexpr double kTrackingFactor = 10.0;
constexpr double kNeighbourhood = 1e-3;
constexpr double kCanardFactor = 10.0;
constexpr double kCanardSeparation = 1e-2;
constexpr double kJacobianTol = 1e-5;
constexpr double kEigenResidual = 1e-8;

// Linear exactness and recurrence.
Outcome linear_exactness() {
    Outcome o;
    const auto r = run_experiment("linear_benchmark", "default");
    const double eps = get_double(r.inputs["config"], "linear.epsilon");
    const auto& ratios = r.table("ratios");
    double worst = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        const double d = r.inputs["config"]["linear"]["span"].get<double>() /
                         r.inputs["config"]["linear"]["recurrence_intervals"].get<double>();
        const double closed = (d * d - 6 * d * eps + 12 * eps * eps) / (d * d + 6 * d * eps + 12 * eps * eps);
        worst = std::max(worst, std::abs(ratios.at(i, "ratio") - closed) / closed);
        o.require(std::abs(ratios.at(i, "w")) > 1e-13, "row with |w| <= 1e-13 in ratio table");
    }
    o.require(ratios.size() > 0, "no recurrence rows");
    o.require(worst <= kRecurrenceTol, "recurrence deviation " + fmt(worst));
    o.note("recurrence rows " + std::to_string(ratios.size()) + ", max rel dev " + fmt(worst));

    // Slow-manifold boundary data: interior knots must sit on x1 = y - eps.
    const auto sys = models::linear_system({eps});
    const auto mesh = Mesh::uniform(0.0, 1.0, 100);
    std::vector<Vector> zs;
    for (double t : mesh.times()) zs.push_back(models::linear_critical(t));
    const auto bounds = default_boundary_manifolds(sys, Vector{{-eps, 0.0, 0.0}}, Vector{{1.0 - eps, 0.0, 1.0}});
    const auto sol = smst_compute(sys, TrajectorySegment(mesh, zs), {}, bounds);
    double err = 0.0;
    for (int j = 0; j <= 100; ++j) {
        const Vector exact{{mesh[j] - eps, 0.0, mesh[j]}};
        err = std::max(err, (sol.segment.z(j) - exact).lpNorm<Eigen::Infinity>());
    }
    o.require(sol.report.converged, "slow-manifold solve did not converge");
    o.require(err <= kSlowManifoldTol, "slow-manifold error " + fmt(err));
    o.note("slow-manifold error " + fmt(err));
    return o;
}

// Decay-factor bound for delta <= eps.
Outcome ratio_bound() {
    Outcome o;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 1; i <= kRhoSamples; ++i) {
        const double eps = 0.01;
        const double delta = eps * i / kRhoSamples;
        const double rho = models::linear_ratio(delta, eps);
        const double e = std::exp(-delta / eps);
        const double rel = (rho - e) / e;
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
    }
    o.require(lo > 0.0, "relative error not positive: " + fmt(lo));
    o.require(hi < kRhoBound, "relative error above bound: " + fmt(hi));
    o.note(std::to_string(kRhoSamples) + " samples, rel error in [" + fmt(lo) + ", " + fmt(hi) + "]");
    return o;
}

// Observed order on the linear benchmark with perturbed boundary data.
Outcome fourth_order() {
    Outcome o;
    const auto r = run_experiment("linear_benchmark", "default");
    const auto& errors = r.table("errors");
    int steps = 0;
    std::string orders;
    for (size_t i = 0; i + 1 < errors.size(); ++i) {
        const double n0 = errors.at(i, "intervals"), n1 = errors.at(i + 1, "intervals");
        if (n1 != 2 * n0) continue;
        const double p = std::log2(errors.at(i, "max_error") / errors.at(i + 1, "max_error"));
        orders += (orders.empty() ? "" : ", ") + fmt(p);
        o.require(p >= kOrderLow && p <= kOrderHigh, "order " + fmt(p) + " outside [3.3, 4.5]");
        ++steps;
    }
    o.require(steps >= 2, "fewer than two refinement steps");
    o.require(r.metric("recurrence_converged") == 1.0, "solver did not converge");
    o.note("orders " + orders);
    return o;
}

// Newton iterations on the Morris-Lecar middle branch.
Outcome newton_efficiency() {
    Outcome o;
    const models::MorrisLecarParams p{-0.22, 0.002};
    const auto sys = models::ml_system(p);
    const auto vs = linspace(-0.2, -0.05, kNewtonMeshPoints);
    for (double f : models::ml_folds()) o.require(f < vs.front() || f > vs.back(), "fold inside the mesh");
    const auto ts = chart_times(vs, [&](double v) { return (p.k - v) / models::ml_critical_current_slope(v); });
    std::vector<Vector> zs;
    for (double v : vs) zs.push_back(models::ml_critical_curve(v));
    const TrajectorySegment candidate(Mesh(ts), zs);
    const auto sol = smst_compute(sys, candidate);
    const auto bounds = default_boundary_manifolds(sys, zs.front(), zs.back());
    const double residual = collocation_residual(CollocationProblem(sys, candidate.mesh, bounds.first, bounds.second),
                                                 sol.segment)
                                .lpNorm<Eigen::Infinity>();
    o.require(sol.report.converged, "did not converge");
    o.require(sol.report.iterations <= kNewtonMaxIterations,
              std::to_string(sol.report.iterations) + " iterations");
    o.require(residual <= kNewtonResidual, "residual " + fmt(residual));
    o.note(std::to_string(sol.report.iterations) + " iterations, residual " + fmt(residual) + ", halvings " +
           std::to_string(sol.report.damping_halvings));
    return o;
}

// Displaced pairs at the reference slow-manifold point.
Outcome bracketing() {
    Outcome o;
    const auto r = run_experiment("bracketing_test", "terman_test");
    o.require(std::abs(r.metric("base_v") + 0.11) < 0.01, "base point not near v = -0.11");
    const auto& ladder = r.table("ladder");
    std::map<int, std::vector<std::pair<double, double>>> times;  // kind -> (distance, time)
    int pairs = 0;
    for (size_t i = 0; i < ladder.size(); ++i) {
        const double d = ladder.at(i, "distance");
        if (d < kBracketFloor * (1 - 1e-9)) continue;
        const int kind = static_cast<int>(ladder.at(i, "kind"));
        ++pairs;
        o.require(ladder.at(i, "censored") == 0.0 && ladder.at(i, "opposite") == 1.0,
                  "pair at d = " + fmt(d) + " kind " + std::to_string(kind) + " not opposite");
        times[kind].push_back({d, std::min(ladder.at(i, "time_plus"), ladder.at(i, "time_minus"))});
        times[kind + 10].push_back({d, std::max(ladder.at(i, "time_plus"), ladder.at(i, "time_minus"))});
    }
    o.require(pairs == 12, std::to_string(pairs) + " pairs in 1e-4..1e-9 (expected 12)");
    for (auto& [kind, series] : times) {
        std::sort(series.begin(), series.end(), [](auto& a, auto& b) { return a.first > b.first; });
        for (size_t i = 1; i < series.size(); ++i)
            o.require(series[i].second > series[i - 1].second, "departure time not increasing at d = " +
                                                                   fmt(series[i].first));
    }
    o.note(std::to_string(pairs) + " pairs opposite, largest failing d " + fmt(r.metric("largest_failed_distance")));
    return o;
}

// W^u vs W^s gap on the section over three eps values.
Outcome section_sweep() {
    Outcome o;
    const auto r = run_experiment("section_scan", "terman_sect");
    const auto& scan = r.table("scan");
    std::map<double, std::pair<double, double>> by_eps;
    for (size_t i = 0; i < scan.size(); ++i)
        by_eps[scan.at(i, "epsilon")] = {scan.at(i, "gap"), scan.at(i, "min_abs_gap")};
    auto get = [&](double e) {
        for (auto& [k, v] : by_eps)
            if (std::abs(k - e) < 1e-12) return v;
        o.require(false, "eps " + fmt(e) + " missing");
        return std::pair<double, double>{NAN, NAN};
    };
    const auto low = get(0.006362), mid = get(0.006366), high = get(0.006367);
    o.require(low.first < 0.0, "gap at 0.006362 not negative (" + fmt(low.first) + ")");
    o.require(high.first > 0.0, "gap at 0.006367 not positive (" + fmt(high.first) + ")");
    o.require(kGapContrast * mid.second <= std::min(low.second, high.second),
              "min |gap| at 0.006366 (" + fmt(mid.second) + ") not 10x below neighbours (" + fmt(low.second) + ", " +
                  fmt(high.second) + ")");
    o.note("gaps " + fmt(low.first) + ", " + fmt(mid.first) + ", " + fmt(high.first));
    return o;
}

// Return-map jumps and spike counts.
Outcome return_map_structure() {
    Outcome o;
    const auto r = run_experiment("return_map", "terman");
    const auto& map = r.table("return_map");
    o.require(map.size() == 300, "expected 300 points");
    std::vector<size_t> returned;
    for (size_t i = 0; i < map.size(); ++i)
        if (map.at(i, "returned") == 1.0) returned.push_back(i);
    std::vector<size_t> jumps;
    for (size_t k = 0; k < returned.size(); ++k)
        if (map.at(returned[k], "jump_after") == 1.0) jumps.push_back(k);
    o.require(jumps.size() == kReturnJumps, std::to_string(jumps.size()) + " jumps");
    std::set<int> inside, outside;
    double v_low = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < returned.size(); ++k) {
        const int spikes = static_cast<int>(map.at(returned[k], "spikes"));
        v_low = std::min(v_low, map.at(returned[k], "v_final"));
        if (jumps.size() == 2 && k > jumps[0] && k <= jumps[1])
            inside.insert(spikes);
        else
            outside.insert(spikes);
    }
    o.require(inside == std::set<int>{kSpikesBetween}, "spike counts between jumps not uniformly 3");
    o.require(outside == std::set<int>{kSpikesOutside}, "spike counts outside jumps not uniformly 2");
    o.require(v_low >= kReturnVLow && v_low <= kReturnVHigh, "minimum return v " + fmt(v_low));
    o.note(std::to_string(returned.size()) + " returns, " + std::to_string(jumps.size()) + " jumps, min v " +
           fmt(v_low));
    return o;
}

/// Distance to the origin of the first or last orbit row outside the given leg.
double endpoint_distance(const Table& orbit, bool first, double skip_leg) {
    std::vector<size_t> rows;
    for (size_t i = 0; i < orbit.size(); ++i)
        if (orbit.at(i, "leg") != skip_leg) rows.push_back(i);
    const size_t i = first ? rows.front() : rows.back();
    return std::sqrt(std::pow(orbit.at(i, "x1"), 2) + std::pow(orbit.at(i, "x2"), 2) + std::pow(orbit.at(i, "y"), 2));
}

// FHN fast wave.
Outcome fhn_fast_wave() {
    Outcome o;
    const auto r = run_experiment("fhn_homoclinic", "fhn_fast_wave");
    const double eps = r.metric("epsilon");
    const auto& junctions = r.table("junctions");
    double worst = 0.0;
    for (double g : junctions.values("gap")) worst = std::max(worst, g);
    o.require(junctions.size() > 0 && worst <= kJunctionGap, "junction gap " + fmt(worst));
    const auto& orbit = r.table("orbit");
    // Leg 5 is the equilibrium itself; the assembled orbit ends with the S_l leg.
    const double start = endpoint_distance(orbit, true, 5.0), end = endpoint_distance(orbit, false, 5.0);
    o.require(start <= kEndpointDistance && end <= kEndpointDistance,
              "endpoints " + fmt(start) + ", " + fmt(end) + " from q");
    const double tr = r.metric("tracking_right"), tl = r.metric("tracking_left");
    o.require(tr <= kTrackingFactor * eps && tl <= kTrackingFactor * eps, "tracking " + fmt(tr) + ", " + fmt(tl));
    o.note("max gap " + fmt(worst) + ", endpoints " + fmt(start) + "/" + fmt(end) + ", tracking " + fmt(tr) + "/" +
           fmt(tl) + " (10 eps = " + fmt(kTrackingFactor * eps) + ")");
    return o;
}

// FHN slow wave.
Outcome fhn_slow_wave() {
    Outcome o;
    const auto r = run_experiment("fhn_homoclinic", "fhn_slow_wave");
    const double right = r.metric("orbit_min_distance_right"), left = r.metric("orbit_min_distance_left");
    o.require(right > kNeighbourhood, "min distance to S_r " + fmt(right));
    o.require(left < kNeighbourhood, "min distance to S_l " + fmt(left));
    o.note("min distance to S_r " + fmt(right) + ", to S_l " + fmt(left));
    return o;
}

// Reciprocal-inhibition canard.
Outcome ri_canard() {
    Outcome o;
    // Departure is detected at a distance strictly above the separation bound.
    const auto r = run_experiment("ri_canard", "ri_section52", {{"canard.departure", "0.011"}});
    const double eps = r.metric("epsilon");
    const double dev = r.metric("interior_fast_deviation");
    o.require(dev <= kCanardFactor * eps, "interior deviation " + fmt(dev));
    // Recompute the deviation over the interior 80% from the gamma table.
    const auto& gamma = r.table("gamma");
    const double t0 = gamma.at(0, "t"), t1 = gamma.at(gamma.size() - 1, "t");
    double worst = 0.0;
    for (size_t i = 0; i < gamma.size(); ++i) {
        const double t = gamma.at(i, "t");
        if (t < t0 + 0.1 * (t1 - t0) || t > t1 - 0.1 * (t1 - t0)) continue;
        worst = std::max(worst, gamma.at(i, "fast_deviation"));
    }
    o.require(worst <= kCanardFactor * eps, "interior deviation from table " + fmt(worst));
    const auto& dep = r.table("departures");
    int pairs = 0;
    for (size_t i = 0; i < dep.size(); ++i) {
        if (dep.at(i, "family") != 0.0 || dep.at(i, "fraction") >= 1.0) continue;
        ++pairs;
        const bool ok = dep.at(i, "censored") == 0.0 && dep.at(i, "opposite") == 1.0 &&
                        std::max(dep.at(i, "time_plus"), dep.at(i, "time_minus")) < t1;
        o.require(ok, "unstable pair at fraction " + fmt(dep.at(i, "fraction")));
    }
    o.require(pairs > 0, "no unstable pairs");
    o.require(get_double(r.inputs["config"], "canard.departure") > kCanardSeparation,
              "departure threshold not above 1e-2");
    o.note("interior deviation " + fmt(worst) + " (10 eps = " + fmt(kCanardFactor * eps) + "), " +
           std::to_string(pairs) + " unstable pairs opposite");
    return o;
}

double eigen_residual(const SlowFastSystem& sys, const Vector& z) {
    const auto d = strong_directions(sys, z);
    const int m = sys.fast_dim();
    const Matrix jac = sys.fast_jacobian(sys.fast_part(z), sys.slow_part(z), sys.epsilon());
    double worst = 0.0;
    auto check = [&](const std::vector<std::complex<double>>& values, const std::vector<Vector>& vecs) {
        for (size_t i = 0; i < vecs.size(); ++i) {
            const Vector v = vecs[i].head(m);
            double res;
            if (values[i].imag() == 0.0) {
                res = (jac * v - values[i].real() * v).norm();
            } else {
                Matrix plane(m, 2);
                plane << v, vecs[values[i].imag() > 0 ? i + 1 : i - 1].head(m);
                const Vector jv = jac * v;
                res = (plane * plane.colPivHouseholderQr().solve(jv) - jv).norm();
            }
            worst = std::max(worst, res / jac.norm());
        }
    };
    check(d.stable_values, d.stable_vectors);
    check(d.unstable_values, d.unstable_vectors);
    if (static_cast<int>(d.stable_values.size() + d.unstable_values.size()) != m) worst = INFINITY;
    return worst;
}

// Residual Jacobian and eigenpair oracles.
Outcome jacobian_oracles() {
    Outcome o;
    oracle::Sampler rng(101);
    struct Case {
        std::string name;
        SlowFastSystem sys;
        std::vector<Vector> knots;
    };
    std::vector<Case> cases;
    {
        std::vector<Vector> zs;
        for (int j = 0; j < 6; ++j) zs.push_back(rng.in_box({-1, -1, -1}, {1, 1, 1}));
        cases.push_back({"linear", models::linear_system({0.1}), zs});
    }
    {
        std::vector<Vector> zs;
        for (int j = 0; j < 6; ++j) zs.push_back(models::ml_critical_curve(-0.2 + 0.03 * j));
        cases.push_back({"morris_lecar", models::ml_system({-0.22, 0.002}), zs});
    }
    {
        std::vector<Vector> zs;
        for (int j = 0; j < 6; ++j) zs.push_back(models::fhn_critical(0.75 + 0.05 * j, 0.0));
        cases.push_back({"fhn", models::fhn_system({}), zs});
    }
    {
        std::vector<Vector> zs;
        for (int j = 0; j < 6; ++j) zs.push_back(models::ri_lift({-0.17 + 0.005 * j, 0.86 - 0.005 * j}, {}));
        cases.push_back({"reciprocal_inhibition", models::ri_system({}), zs});
    }
    for (auto& c : cases) {
        for (auto& z : c.knots) z += 1e-4 * rng.in_box(std::vector<double>(z.size(), -1), std::vector<double>(z.size(), 1));
        std::vector<double> ts;
        for (size_t j = 0; j < c.knots.size(); ++j) ts.push_back(0.01 * j + 0.002 * j * j);
        const Mesh mesh(ts);
        const TrajectorySegment seg(mesh, c.knots);
        const int d = c.sys.dim();
        const Matrix id = Matrix::Identity(d, d);
        const CollocationProblem problem(c.sys, mesh, BoundaryManifold(id.topRows(d - 1), c.knots.front()),
                                         BoundaryManifold(id.bottomRows(1), c.knots.back()));
        const Matrix fd = oracle::central_jacobian(
            [&](const Vector& flat) { return collocation_residual(problem, TrajectorySegment::unflatten(mesh, flat, d)); },
            seg.flatten());
        const double jac_err = oracle::rel_diff(residual_jacobian(problem, seg), fd);
        o.require(jac_err <= kJacobianTol, c.name + " Jacobian rel error " + fmt(jac_err));
        double eig = 0.0;
        for (const auto& z : c.knots) eig = std::max(eig, eigen_residual(c.sys, z));
        o.require(eig <= kEigenResidual, c.name + " eigen residual " + fmt(eig));
        o.note(c.name + " " + fmt(jac_err) + "/" + fmt(eig));
    }
    const Vector middle = models::fhn_critical(0.3, 0.0);
    const double eig = eigen_residual(models::fhn_system({}), middle);
    o.require(eig <= kEigenResidual, "fhn middle branch eigen residual " + fmt(eig));
    return o;
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {"linear_exactness", 1.0, linear_exactness},
        {"ratio_bound", 1.0, ratio_bound},
        {"fourth_order", 5.0, fourth_order},
        {"newton_efficiency", 10.0, newton_efficiency},
        {"bracketing", 30.0, bracketing},
        {"section_sweep", 120.0, section_sweep},
        {"return_map", 300.0, return_map_structure},
        {"fhn_fast_wave", 120.0, fhn_fast_wave},
        {"fhn_slow_wave", 120.0, fhn_slow_wave},
        {"ri_canard", 60.0, ri_canard},
        {"jacobian_oracles", 30.0, jacobian_oracles},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.size() == 1 && wanted[0] == "--list") {
        for (const auto& c : criteria()) std::printf("%s\n", c.name.c_str());
        return 0;
    }
    int failures = 0;
    int ran = 0;
    for (const auto& c : criteria()) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.runtime_limit_s) out.require(false, "runtime " + fmt(secs) + " s over " + fmt(c.runtime_limit_s) + " s");
        std::printf("%s %s (%.2f s, limit %.0f s): %s\n", out.pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                    c.runtime_limit_s, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 2;
    }
    return failures ? 1 : 0;
}
