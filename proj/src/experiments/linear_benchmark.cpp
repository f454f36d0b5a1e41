#include <cmath>
#include <limits>

#include "smst/experiments/experiments.hpp"

namespace smst::experiments {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LinearRun {
    SolveResult solve;
    double max_error = kNaN;
};

/// Solves on a uniform mesh with boundary bases at the given points; the error
/// is measured against the closed-form flow from the left base point.
LinearRun solve_linear(const SlowFastSystem& system, double y0, double span, int intervals, const Vector& p_left,
                       const Vector& p_right, const SmstOptions& opts) {
    const Mesh mesh = Mesh::uniform(y0, y0 + span, intervals);
    std::vector<Vector> states;
    for (int j = 0; j <= intervals; ++j) states.push_back(models::linear_critical(mesh[j]));
    auto solve = smst_compute(system, TrajectorySegment(mesh, states), opts,
                              default_boundary_manifolds(system, p_left, p_right));
    LinearRun run{std::move(solve)};
    double err = 0.0;
    for (int j = 0; j <= intervals; ++j) {
        const Vector exact = models::linear_exact(p_left, mesh[j] - y0, system.epsilon());
        err = std::max(err, (run.solve.segment.z(j) - exact).lpNorm<Eigen::Infinity>());
    }
    run.max_error = err;
    return run;
}

/// Deviation from the slow manifold x1 = y - eps.
double off_manifold(const Vector& z, double eps) { return z[2] - z[0] - eps; }

}  // namespace

ExperimentResult linear_benchmark(const Json& config) {
    const auto params = linear_params(config);
    const double eps = params.epsilon;
    const double span = get_double(config, "linear.span");
    const double y0 = get_double(config, "linear.y0");
    const int n_rec = get_int(config, "linear.recurrence_intervals");
    const auto sizes = get_ints(config, "linear.mesh_sizes");
    const double perturbation = get_double(config, "linear.perturbation");
    const int samples = get_int(config, "linear.ratio_samples");
    const auto opts = smst_options(config);
    require(eps > 0.0 && span > 0.0, "linear benchmark needs eps > 0 and span > 0");
    require(n_rec >= 2 && samples >= 1, "linear benchmark needs >= 2 recurrence intervals and >= 1 ratio sample");
    for (int n : sizes) require(n >= 2, "linear benchmark mesh sizes must be >= 2 intervals");

    const auto system = models::linear_system(params);
    ExperimentResult result;
    result.name = "linear_benchmark";

    const Vector on_left{{y0 - eps, 0.0, y0}};
    const Vector on_right{{y0 + span - eps, 0.0, y0 + span}};
    const Vector off_left{{y0 - eps + perturbation, 0.0, y0}};

    // (a) errors against the closed form with perturbed left data, per mesh.
    Table errors("errors", {"intervals [1]", "h [slow time]", "max_error [1]", "iterations [1]", "converged [bool]",
                            "final_residual [1]"});
    std::vector<double> errs;
    Json reports = Json::array();
    for (int n : sizes) {
        try {
            const auto run = solve_linear(system, y0, span, n, off_left, on_right, opts);
            errors.add({double(n), span / n, run.max_error, double(run.solve.report.iterations),
                        run.solve.report.converged ? 1.0 : 0.0, run.solve.report.final_residual});
            errs.push_back(run.solve.report.converged ? run.max_error : kNaN);
            reports.push_back(to_json(run.solve.report));
        } catch (const Error& e) {
            errors.add({double(n), span / n, kNaN, 0.0, 0.0, kNaN});
            errs.push_back(kNaN);
            reports.push_back({{"error", e.what()}});
        }
    }
    result.provenance["mesh_solves"] = reports;

    // (b) observed orders between successive meshes.
    Table orders("orders", {"coarse_intervals [1]", "fine_intervals [1]", "order [1]"});
    double order_min = std::numeric_limits<double>::infinity();
    double order_max = -order_min;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        const double ratio = static_cast<double>(sizes[i + 1]) / sizes[i];
        const double p = std::log(errs[i] / errs[i + 1]) / std::log(ratio);
        orders.add({double(sizes[i]), double(sizes[i + 1]), p});
        if (std::isfinite(p)) {
            order_min = std::min(order_min, p);
            order_max = std::max(order_max, p);
        }
    }

    // (c) per-interval decay of the deviation from the slow manifold.
    const Mesh mesh = Mesh::uniform(y0, y0 + span, n_rec);
    std::vector<Vector> states;
    for (int j = 0; j <= n_rec; ++j) states.push_back(models::linear_critical(mesh[j]));
    const auto rec = smst_compute(system, TrajectorySegment(mesh, states), opts);
    result.provenance["recurrence_solve"] = to_json(rec.report);
    Table ratios("ratios", {"j [1]", "t [slow time]", "w [1]", "ratio [1]", "closed_form [1]", "rel_dev [1]"});
    double rec_max = 0.0;
    for (int j = 0; j < n_rec; ++j) {
        const double w0 = off_manifold(rec.segment.z(j), eps);
        const double w1 = off_manifold(rec.segment.z(j + 1), eps);
        if (std::abs(w0) <= 1e-13) continue;
        const double closed = models::linear_ratio(mesh.step(j), eps);
        const double dev = std::abs(w1 / w0 - closed) / std::abs(closed);
        ratios.add({double(j), mesh[j], w0, w1 / w0, closed, dev});
        rec_max = std::max(rec_max, dev);
    }

    // Boundary data on the slow manifold reproduces it at every knot.
    const auto exact_run = solve_linear(system, y0, span, n_rec, on_left, on_right, opts);
    result.provenance["slow_manifold_solve"] = to_json(exact_run.solve.report);

    // (d) decay factor against exp(-delta/eps) for delta <= eps.
    Table rho("rho", {"delta_over_eps [1]", "rho [1]", "exp [1]", "rel_error [1]"});
    double rel_min = std::numeric_limits<double>::infinity();
    double rel_max = -rel_min;
    for (int i = 1; i <= samples; ++i) {
        const double x = static_cast<double>(i) / samples;
        const double r = models::linear_ratio(x * eps, eps);
        const double e = std::exp(-x);
        const double rel = (r - e) / e;
        rho.add({x, r, e, rel});
        rel_min = std::min(rel_min, rel);
        rel_max = std::max(rel_max, rel);
    }

    result.add_table(std::move(errors));
    result.add_table(std::move(orders));
    result.add_table(std::move(ratios));
    result.add_table(std::move(rho));

    result.set_metric("recurrence_max_rel_dev", rec_max);
    result.set_metric("recurrence_rows", static_cast<double>(result.table("ratios").size()));
    result.set_metric("recurrence_converged", rec.report.converged ? 1.0 : 0.0);
    result.set_metric("slow_manifold_max_error", exact_run.max_error);
    if (std::isfinite(order_min)) {
        result.set_metric("order_min", order_min);
        result.set_metric("order_max", order_max);
    }
    result.set_metric("rho_rel_error_min", rel_min);
    result.set_metric("rho_rel_error_max", rel_max);
    return result;
}

}  // namespace smst::experiments
