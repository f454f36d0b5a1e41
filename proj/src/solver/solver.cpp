#include "smst/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace smst {

void SmstOptions::validate() const {
    require(newton_tolerance > 0.0, "newton_tolerance must be > 0");
    require(max_iterations >= 1, "max_iterations must be >= 1");
    require(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    require(max_halvings >= 0, "max_halvings must be >= 0");
}

HermiteMidpoint hermite_midpoint(const Vector& z_a, const Vector& z_b, const Vector& f_a, const Vector& f_b,
                                 double t_a, double t_b) {
    require(t_b > t_a, "hermite_midpoint needs t_b > t_a");
    const double h = t_b - t_a;
    HermiteMidpoint out;
    out.sigma = 0.5 * (z_a + z_b) - (h / 8.0) * (f_b - f_a);
    // 3(z_b - z_a)/(2h) evaluated as 1.5 * ((z_b - z_a)/h) so that a slow
    // coordinate advancing exactly by h gives an exactly zero residual.
    out.sigma_prime = 1.5 * ((z_b - z_a) / h) - 0.25 * (f_a + f_b);
    return out;
}

CollocationProblem::CollocationProblem(SlowFastSystem system, Mesh mesh, BoundaryManifold left,
                                       BoundaryManifold right)
    : system_(std::move(system)), mesh_(std::move(mesh)), left_(std::move(left)), right_(std::move(right)) {
    const int d = system_.dim();
    require(left_.ambient_dim() == d && right_.ambient_dim() == d, "boundary manifolds must live in R^{m+n}");
    require(left_.codim() + right_.codim() == d, "boundary codimensions must sum to m+n");
    require(mesh_.intervals() >= 1, "collocation mesh needs N >= 1");
}

namespace {

void check_conforms(const CollocationProblem& problem, const TrajectorySegment& segment) {
    require(segment.points() == problem.mesh().points(), "segment does not conform to the problem mesh");
    require(segment.dim() == problem.system().dim(), "segment dimension differs from system dimension");
    for (int j = 0; j < segment.points(); ++j)
        require(segment.t(j) == problem.mesh()[j], "segment times differ from the problem mesh");
}

Vector field_at(const SlowFastSystem& system, const Vector& z, long interval) {
    try {
        return assemble_field(system, z);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::model_evaluation) throw;
        fail(ErrorKind::model_evaluation, "field evaluation failed", z, interval);
    }
}

}  // namespace

Vector collocation_residual(const CollocationProblem& problem, const TrajectorySegment& segment) {
    check_conforms(problem, segment);
    const auto& system = problem.system();
    const auto& mesh = problem.mesh();
    const int d = system.dim();
    const int intervals = mesh.intervals();

    std::vector<Vector> f(static_cast<size_t>(segment.points()));
    for (int j = 0; j < segment.points(); ++j) f[static_cast<size_t>(j)] = field_at(system, segment.z(j), j);

    Vector r(problem.equations());
    for (int j = 0; j < intervals; ++j) {
        const auto mid = hermite_midpoint(segment.z(j), segment.z(j + 1), f[static_cast<size_t>(j)],
                                          f[static_cast<size_t>(j) + 1], mesh[j], mesh[j + 1]);
        r.segment(static_cast<Eigen::Index>(j) * d, d) = field_at(system, mid.sigma, j) - mid.sigma_prime;
    }
    const Eigen::Index base = static_cast<Eigen::Index>(intervals) * d;
    const int rl = problem.left().codim();
    r.segment(base, rl) = problem.left().residual(segment.z(0));
    r.segment(base + rl, problem.right().codim()) = problem.right().residual(segment.z(intervals));
    return r;
}

Matrix residual_jacobian(const CollocationProblem& problem, const TrajectorySegment& segment, JacobianMode mode) {
    check_conforms(problem, segment);
    const auto& system = problem.system();
    const auto& mesh = problem.mesh();
    const int d = system.dim();
    const int intervals = mesh.intervals();
    auto jac = [&](const Vector& z) {
        return mode == JacobianMode::analytic ? assemble_jacobian(system, z) : assemble_jacobian_fd(system, z);
    };

    std::vector<Vector> f(static_cast<size_t>(segment.points()));
    std::vector<Matrix> df(static_cast<size_t>(segment.points()));
    for (int j = 0; j < segment.points(); ++j) {
        f[static_cast<size_t>(j)] = field_at(system, segment.z(j), j);
        df[static_cast<size_t>(j)] = jac(segment.z(j));
    }

    const Matrix eye = Matrix::Identity(d, d);
    Matrix out = Matrix::Zero(problem.equations(), problem.equations());
    for (int j = 0; j < intervals; ++j) {
        const auto ja = static_cast<size_t>(j);
        const double h = mesh.step(j);
        const auto mid = hermite_midpoint(segment.z(j), segment.z(j + 1), f[ja], f[ja + 1], mesh[j], mesh[j + 1]);
        const Matrix dfs = jac(mid.sigma);
        const Eigen::Index row = static_cast<Eigen::Index>(j) * d;
        out.block(row, row, d, d) = dfs * (0.5 * eye + (h / 8.0) * df[ja]) + (1.5 / h) * eye + 0.25 * df[ja];
        out.block(row, row + d, d, d) =
            dfs * (0.5 * eye - (h / 8.0) * df[ja + 1]) - (1.5 / h) * eye + 0.25 * df[ja + 1];
    }
    const Eigen::Index base = static_cast<Eigen::Index>(intervals) * d;
    const int rl = problem.left().codim();
    out.block(base, 0, rl, d) = problem.left().constraint();
    out.block(base + rl, base, problem.right().codim(), d) = problem.right().constraint();
    return out;
}

SolveResult newton_solve(const CollocationProblem& problem, const TrajectorySegment& initial,
                         const SmstOptions& opts) {
    opts.validate();
    check_conforms(problem, initial);
    const auto& mesh = problem.mesh();
    const int d = problem.system().dim();

    SolverReport report;
    report.tolerance = opts.newton_tolerance;

    Vector z = initial.flatten();
    auto residual_of = [&](const Vector& flat) {
        return collocation_residual(problem, TrajectorySegment::unflatten(mesh, flat, d));
    };
    Vector r = residual_of(z);
    double norm = r.lpNorm<Eigen::Infinity>();
    const double initial_norm = norm;
    report.residual_history.push_back(norm);
    Vector best = z;
    double best_norm = norm;
    bool stagnated = false;

    while (norm > opts.newton_tolerance && report.iterations < opts.max_iterations) {
        const Matrix j = residual_jacobian(problem, TrajectorySegment::unflatten(mesh, z, d), opts.jacobian_mode);
        Eigen::PartialPivLU<Matrix> lu(j);
        const Vector dz = lu.solve(-r);
        if (!(lu.rcond() > 0.0) || !dz.allFinite())
            fail(ErrorKind::singular_matrix, "collocation Jacobian is singular", std::nullopt, report.iterations);

        double scale = opts.damping;
        Vector trial;
        Vector r_trial;
        double trial_norm = std::numeric_limits<double>::infinity();
        for (int halving = 0;; ++halving) {
            trial = z + scale * dz;
            try {
                r_trial = residual_of(trial);
                trial_norm = r_trial.lpNorm<Eigen::Infinity>();
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::model_evaluation) throw;
                trial_norm = std::numeric_limits<double>::infinity();
            }
            if (trial_norm < norm || halving == opts.max_halvings) break;
            scale *= 0.5;
            ++report.damping_halvings;
        }
        if (!std::isfinite(trial_norm) || (trial_norm >= norm && trial_norm > 10.0 * initial_norm))
            fail(ErrorKind::residual_divergence,
                 "residual grew from " + std::to_string(initial_norm) + " to " + std::to_string(trial_norm),
                 std::nullopt, report.iterations);
        if (trial_norm >= norm) {
            stagnated = true;
            break;
        }

        z = std::move(trial);
        r = std::move(r_trial);
        norm = trial_norm;
        ++report.iterations;
        report.step_norms.push_back(scale * dz.lpNorm<Eigen::Infinity>());
        report.residual_history.push_back(norm);
        if (norm < best_norm) {
            best_norm = norm;
            best = z;
        }
    }

    report.converged = norm <= opts.newton_tolerance;
    if (!report.converged) {
        z = best;
        report.message = stagnated ? "residual stopped decreasing; returning best iterate"
                                   : "maximum iterations exceeded; returning best iterate";
    }
    report.final_residual = report.converged ? norm : best_norm;
    return {TrajectorySegment::unflatten(mesh, z, d), std::move(report)};
}

Matrix fast_coordinate_rows(const SlowFastSystem& system, const Vector& base) {
    const int m = system.fast_dim();
    const int n = system.slow_dim();
    const auto dirs = strong_directions(system, base);
    const Matrix coords = dirs.coordinate_map();
    const Matrix jac = system.unscaled_jacobian(base);
    Eigen::FullPivLU<Matrix> lu(jac.topLeftCorner(m, m));
    if (!lu.isInvertible()) fail(ErrorKind::fold_singularity, "D_x f singular at boundary point", base);
    const Matrix dh = -lu.solve(jac.topRightCorner(m, n));
    Matrix tangent_free(m, m + n);
    tangent_free << Matrix::Identity(m, m), -dh;
    return coords * tangent_free;
}

std::pair<BoundaryManifold, BoundaryManifold> default_boundary_manifolds(const SlowFastSystem& system,
                                                                        const Vector& p_left,
                                                                        const Vector& p_right) {
    const int m = system.fast_dim();
    const int n = system.slow_dim();
    const auto left_dirs = strong_directions(system, p_left);
    const auto right_dirs = strong_directions(system, p_right);
    require(left_dirs.u == right_dirs.u, "unstable dimension differs between the two boundary points");
    const int u = left_dirs.u;
    const int s = m - u;
    require(u >= 1, "slow manifold has no unstable fast directions; use an initial value solver");

    const Matrix rows_l = fast_coordinate_rows(system, p_left);
    Matrix a_left = Matrix::Zero(s + n, m + n);
    if (s > 0) a_left.topRows(s) = rows_l.topRows(s);
    a_left.bottomRightCorner(n, n) = Matrix::Identity(n, n);

    const Matrix rows_r = fast_coordinate_rows(system, p_right);
    Matrix a_right = rows_r.bottomRows(u);
    return {BoundaryManifold(std::move(a_left), p_left), BoundaryManifold(std::move(a_right), p_right)};
}

SolveResult smst_compute(const SlowFastSystem& system, const TrajectorySegment& candidate, const SmstOptions& opts,
                         std::optional<std::pair<BoundaryManifold, BoundaryManifold>> boundaries) {
    require(candidate.dim() == system.dim(), "candidate dimension differs from system dimension");
    for (int j = 0; j < candidate.points(); ++j) {
        const Vector& z = candidate.z(j);
        const double res = system.fast(system.fast_part(z), system.slow_part(z), 0.0).lpNorm<Eigen::Infinity>();
        if (!(res <= kCandidateTolerance))
            fail(ErrorKind::precondition,
                 "candidate is not on the critical manifold (f-residual " + std::to_string(res) + ")", z, j);
    }
    if (!boundaries) boundaries = default_boundary_manifolds(system, candidate.z(0), candidate.z(candidate.points() - 1));
    CollocationProblem problem(system, candidate.mesh, std::move(boundaries->first), std::move(boundaries->second));
    return newton_solve(problem, candidate, opts);
}

Vector spline_at(const SlowFastSystem& system, const TrajectorySegment& segment, double t) {
    const auto& times = segment.mesh.times();
    require(t >= times.front() && t <= times.back(), "spline_at: t outside the segment");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    auto j = static_cast<int>(std::distance(times.begin(), it)) - 1;
    j = std::clamp(j, 0, segment.mesh.intervals() - 1);
    const double h = segment.mesh.step(j);
    const double s = (t - times[static_cast<size_t>(j)]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const Vector fa = assemble_field(system, segment.z(j));
    const Vector fb = assemble_field(system, segment.z(j + 1));
    return (2 * s3 - 3 * s2 + 1) * segment.z(j) + (s3 - 2 * s2 + s) * h * fa + (-2 * s3 + 3 * s2) * segment.z(j + 1) +
           (s3 - s2) * h * fb;
}

TrajectorySegment chart_candidate(std::span<const double> chart_values, const std::function<Vector(double)>& lift,
                                  const std::function<double(double)>& time_of) {
    require(chart_values.size() >= 2, "chart candidate needs at least two chart values");
    struct Knot {
        double t;
        Vector z;
    };
    std::vector<Knot> knots;
    knots.reserve(chart_values.size());
    for (double c : chart_values) knots.push_back({time_of(c), lift(c)});
    std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.t < b.t; });
    std::vector<double> times;
    std::vector<Vector> states;
    for (auto& k : knots) {
        times.push_back(k.t);
        states.push_back(std::move(k.z));
    }
    return TrajectorySegment(Mesh(std::move(times)), std::move(states));
}

std::vector<double> chart_times(std::span<const double> chart_values, const std::function<double(double)>& chart_rate,
                                double t0) {
    static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                                    0.9061798459386640};
    static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                      0.4786286704993665, 0.2369268850561891};
    std::vector<double> t(chart_values.size());
    if (t.empty()) return t;
    t[0] = t0;
    for (size_t j = 1; j < chart_values.size(); ++j) {
        const double a = chart_values[j - 1];
        const double b = chart_values[j];
        double sum = 0.0;
        for (size_t q = 0; q < nodes.size(); ++q) {
            const double c = 0.5 * (a + b) + 0.5 * (b - a) * nodes[q];
            const double rate = chart_rate(c);
            if (!(std::abs(rate) > 0.0) || !std::isfinite(rate))
                fail(ErrorKind::fold_singularity, "chart rate vanishes at chart value " + std::to_string(c));
            sum += weights[q] / rate;
        }
        t[j] = t[j - 1] + 0.5 * (b - a) * sum;
    }
    return t;
}

std::vector<double> linspace(double a, double b, int count) {
    require(count >= 2, "linspace needs count >= 2");
    std::vector<double> out(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = a + (b - a) * i / (count - 1);
    out.back() = b;
    return out;
}

}  // namespace smst
