#pragma once

// Boundary-value solver for trajectories on slow manifolds of saddle type.
//
// A trajectory on the mesh t_0 < ... < t_N is represented by its knot values
// z_j. A C^1 cubic Hermite spline sigma interpolates z_j with tangents F(z_j);
// each interval contributes the m+n equations F(sigma(mid)) = sigma'(mid), and
// two affine boundary manifolds contribute the remaining m+n. The resulting
// square system is solved with Newton's method from a candidate on the
// critical manifold.
//
// Residual layout (length (N+1)(m+n)):
//   [ interval 1 | interval 2 | ... | interval N | left rows | right rows ]
// where each interval block holds the fast components followed by the slow
// ones, and the boundary blocks are A_l (z_0 - z*_l) and A_r (z_N - z*_r).

#include <functional>
#include <optional>
#include <span>
#include <utility>

#include "smst/core.hpp"

namespace smst {

enum class JacobianMode { analytic, finite_difference };

struct SmstOptions {
    double newton_tolerance = 1e-12;
    int max_iterations = 25;
    /// Initial step scale in (0, 1].
    double damping = 1.0;
    /// Step halvings allowed per iteration when the residual does not decrease.
    int max_halvings = 4;
    JacobianMode jacobian_mode = JacobianMode::analytic;

    void validate() const;
};

struct HermiteMidpoint {
    Vector sigma;
    Vector sigma_prime;
};

/// Value and derivative at (t_a + t_b)/2 of the cubic Hermite interpolant with
/// data (z_a, F_a) at t_a and (z_b, F_b) at t_b.
[[nodiscard]] HermiteMidpoint hermite_midpoint(const Vector& z_a, const Vector& z_b, const Vector& f_a,
                                               const Vector& f_b, double t_a, double t_b);

class CollocationProblem {
public:
    CollocationProblem(SlowFastSystem system, Mesh mesh, BoundaryManifold left, BoundaryManifold right);

    [[nodiscard]] const SlowFastSystem& system() const noexcept { return system_; }
    [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
    [[nodiscard]] const BoundaryManifold& left() const noexcept { return left_; }
    [[nodiscard]] const BoundaryManifold& right() const noexcept { return right_; }
    /// Dimension of the left boundary manifold.
    [[nodiscard]] int k() const noexcept { return left_.dim(); }
    [[nodiscard]] int equations() const noexcept { return mesh_.points() * system_.dim(); }

private:
    SlowFastSystem system_;
    Mesh mesh_;
    BoundaryManifold left_;
    BoundaryManifold right_;
};

[[nodiscard]] Vector collocation_residual(const CollocationProblem& problem, const TrajectorySegment& segment);

/// Exact derivative of collocation_residual with respect to (z_0, ..., z_N).
/// In finite_difference mode the field Jacobian DF is replaced by central
/// differences; the chain rule through the spline is kept.
[[nodiscard]] Matrix residual_jacobian(const CollocationProblem& problem, const TrajectorySegment& segment,
                                       JacobianMode mode = JacobianMode::analytic);

struct SolveResult {
    TrajectorySegment segment;
    SolverReport report;
};

[[nodiscard]] SolveResult newton_solve(const CollocationProblem& problem, const TrajectorySegment& initial,
                                       const SmstOptions& opts = {});

/// Boundary manifolds through points near S. The left one is spanned by the
/// unstable fast directions (it pins y and the stable coordinates of the fast
/// displacement from the tangent plane of S); the right one is spanned by the
/// stable fast directions and the tangent of S (it pins the unstable
/// coordinates).
[[nodiscard]] std::pair<BoundaryManifold, BoundaryManifold> default_boundary_manifolds(const SlowFastSystem& system,
                                                                                      const Vector& p_left,
                                                                                      const Vector& p_right);

/// Fast displacement of z from the tangent plane of S at base, written in the
/// stable / unstable eigen-coordinates of D_x f(base). Rows: s stable then u unstable.
[[nodiscard]] Matrix fast_coordinate_rows(const SlowFastSystem& system, const Vector& base);

/// Maximum f-residual a candidate may have at any mesh point.
inline constexpr double kCandidateTolerance = 1e-8;

/// Runs the solver from a candidate on the critical manifold. Uses the default
/// boundary manifolds through the candidate endpoints unless `boundaries` is set.
[[nodiscard]] SolveResult smst_compute(const SlowFastSystem& system, const TrajectorySegment& candidate,
                                       const SmstOptions& opts = {},
                                       std::optional<std::pair<BoundaryManifold, BoundaryManifold>> boundaries =
                                           std::nullopt);

/// Hermite spline through a segment with tangents F(z_j), evaluated at t.
[[nodiscard]] Vector spline_at(const SlowFastSystem& system, const TrajectorySegment& segment, double t);

/// Candidate on the critical manifold from chart values c_j, a lift c -> z and
/// a time function c -> t. Points are re-ordered so that time increases.
[[nodiscard]] TrajectorySegment chart_candidate(std::span<const double> chart_values,
                                                const std::function<Vector(double)>& lift,
                                                const std::function<double(double)>& time_of);

/// Times along a chart from the chart rate dc/dt, by 5-point Gauss-Legendre
/// quadrature of dt/dc on each chart interval. Returns t_j with t_0 = t0.
[[nodiscard]] std::vector<double> chart_times(std::span<const double> chart_values,
                                              const std::function<double(double)>& chart_rate, double t0 = 0.0);

/// Uniformly spaced chart values on [a, b] (inclusive), count >= 2.
[[nodiscard]] std::vector<double> linspace(double a, double b, int count);

}  // namespace smst
