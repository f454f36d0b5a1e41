#pragma once

// Domain types shared by the solver, the integrators and the models:
// slow-fast vector fields, meshes, discrete trajectories, affine boundary
// manifolds and the fast-subsystem eigen-analysis.
//
// Time convention: every system is written on the slow time scale,
//     eps * x' = f(x, y, eps),   y' = g(x, y, eps),
// with x in R^m fast and y in R^n slow. A combined state z = (x, y) stores the
// fast block first.

#include <complex>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "smst/error.hpp"

namespace smst {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using FieldFn = std::function<Vector(const Vector& x, const Vector& y, double eps)>;
using JacobianFn = std::function<Matrix(const Vector& x, const Vector& y, double eps)>;

/// Fast eigenvalues with |Re| at or below this are treated as a fold.
inline constexpr double kHyperbolicityTolerance = 1e-6;

/// Central-difference step used whenever an analytic Jacobian is missing.
double fd_step(const Vector& z) noexcept;

class SlowFastSystem {
public:
    struct Definition {
        std::string name;
        int m = 0;
        int n = 0;
        double epsilon = 0.0;
        FieldFn fast_field;
        FieldFn slow_field;
        /// D_x f, m x m. Optional.
        JacobianFn fast_jacobian;
        /// D_(x,y) (f, g), (m+n) x (m+n), unscaled by eps. Optional.
        JacobianFn full_jacobian;
        std::map<std::string, double> params;
    };

    explicit SlowFastSystem(Definition def);

    [[nodiscard]] const std::string& name() const noexcept { return def_.name; }
    [[nodiscard]] int fast_dim() const noexcept { return def_.m; }
    [[nodiscard]] int slow_dim() const noexcept { return def_.n; }
    [[nodiscard]] int dim() const noexcept { return def_.m + def_.n; }
    [[nodiscard]] double epsilon() const noexcept { return def_.epsilon; }
    [[nodiscard]] const std::map<std::string, double>& params() const noexcept { return def_.params; }
    [[nodiscard]] double param(const std::string& key) const;

    [[nodiscard]] bool has_fast_jacobian() const noexcept { return static_cast<bool>(def_.fast_jacobian); }
    [[nodiscard]] bool has_full_jacobian() const noexcept { return static_cast<bool>(def_.full_jacobian); }

    [[nodiscard]] Vector fast(const Vector& x, const Vector& y, double eps) const;
    [[nodiscard]] Vector slow(const Vector& x, const Vector& y, double eps) const;

    /// D_x f; analytic when supplied, central differences otherwise.
    [[nodiscard]] Matrix fast_jacobian(const Vector& x, const Vector& y, double eps) const;
    /// D_z (f, g); analytic when supplied. Defaults to the system's epsilon.
    [[nodiscard]] Matrix unscaled_jacobian(const Vector& z) const { return unscaled_jacobian(z, epsilon()); }
    [[nodiscard]] Matrix unscaled_jacobian(const Vector& z, double eps) const;
    /// Same as above but always by central differences (used by the FD modes and tests).
    [[nodiscard]] Matrix unscaled_jacobian_fd(const Vector& z, double eps) const;

    [[nodiscard]] Vector fast_part(const Vector& z) const { return z.head(def_.m); }
    [[nodiscard]] Vector slow_part(const Vector& z) const { return z.tail(def_.n); }
    [[nodiscard]] Vector join(const Vector& x, const Vector& y) const;

    [[nodiscard]] SlowFastSystem with_epsilon(double eps) const;

private:
    Definition def_;
};

/// F(z) = (f/eps, g): the field on the slow time scale.
[[nodiscard]] Vector assemble_field(const SlowFastSystem& system, const Vector& z);
/// DF(z), analytic if the system provides a full Jacobian.
[[nodiscard]] Matrix assemble_jacobian(const SlowFastSystem& system, const Vector& z);
[[nodiscard]] Matrix assemble_jacobian_fd(const SlowFastSystem& system, const Vector& z);

class Mesh {
public:
    explicit Mesh(std::vector<double> times);
    static Mesh uniform(double a, double b, int intervals);

    [[nodiscard]] int intervals() const noexcept { return static_cast<int>(times_.size()) - 1; }
    [[nodiscard]] int points() const noexcept { return static_cast<int>(times_.size()); }
    [[nodiscard]] double operator[](int j) const { return times_[static_cast<size_t>(j)]; }
    [[nodiscard]] double front() const noexcept { return times_.front(); }
    [[nodiscard]] double back() const noexcept { return times_.back(); }
    [[nodiscard]] double step(int j) const { return (*this)[j + 1] - (*this)[j]; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

private:
    std::vector<double> times_;
};

struct TrajectorySegment {
    TrajectorySegment(Mesh mesh, std::vector<Vector> states);

    Mesh mesh;
    std::vector<Vector> states;

    [[nodiscard]] int points() const noexcept { return mesh.points(); }
    [[nodiscard]] int dim() const { return static_cast<int>(states.front().size()); }
    [[nodiscard]] double t(int j) const { return mesh[j]; }
    [[nodiscard]] const Vector& z(int j) const { return states[static_cast<size_t>(j)]; }
    /// Stacked unknown vector (z_0, ..., z_N).
    [[nodiscard]] Vector flatten() const;
    static TrajectorySegment unflatten(const Mesh& mesh, const Vector& flat, int dim);
};

/// Affine implicit manifold { z : A (z - z*) = 0 } of codimension rows(A).
class BoundaryManifold {
public:
    BoundaryManifold(Matrix constraint, Vector base_point);

    [[nodiscard]] const Matrix& constraint() const noexcept { return constraint_; }
    [[nodiscard]] const Vector& base_point() const noexcept { return base_; }
    [[nodiscard]] int codim() const noexcept { return static_cast<int>(constraint_.rows()); }
    [[nodiscard]] int ambient_dim() const noexcept { return static_cast<int>(constraint_.cols()); }
    [[nodiscard]] int dim() const noexcept { return ambient_dim() - codim(); }
    [[nodiscard]] Vector residual(const Vector& z) const { return constraint_ * (z - base_); }
    [[nodiscard]] BoundaryManifold moved_to(const Vector& base) const { return {constraint_, base}; }

private:
    Matrix constraint_;
    Vector base_;
};

/// Eigen-split of D_x f at a point. Vectors are unit length, embedded in R^{m+n}
/// with zero slow block. A complex pair contributes its real and imaginary parts
/// as two consecutive basis vectors (values repeated for both).
struct StrongDirections {
    std::vector<std::complex<double>> stable_values;
    std::vector<std::complex<double>> unstable_values;
    std::vector<Vector> stable_vectors;
    std::vector<Vector> unstable_vectors;
    int u = 0;
    int m = 0;

    /// m x s and m x u real bases of the stable / unstable fast subspaces.
    [[nodiscard]] Matrix stable_basis() const;
    [[nodiscard]] Matrix unstable_basis() const;
    /// Fast-block matrix whose rows extract stable (first s rows) and unstable
    /// (last u rows) coordinates: inverse of [stable_basis | unstable_basis].
    [[nodiscard]] Matrix coordinate_map() const;
    [[nodiscard]] double min_abs_real() const;
};

struct SolverReport {
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<double> step_norms;
    bool converged = false;
    double final_residual = 0.0;
    double tolerance = 0.0;
    /// Total Newton step halvings over the solve; zero means plain Newton.
    int damping_halvings = 0;
    std::string message;
};

/// Eigen-decomposition of D_x f(z) split by sign of the real part.
[[nodiscard]] StrongDirections strong_directions(const SlowFastSystem& system, const Vector& z,
                                                 double hyperbolicity_tolerance = kHyperbolicityTolerance);

struct CriticalPointOptions {
    double tolerance = 1e-12;
    int max_iterations = 50;
};

/// Root of f(., y, 0) = 0 on the branch through x_guess.
[[nodiscard]] Vector critical_point(const SlowFastSystem& system, const Vector& y, const Vector& x_guess,
                                    const CriticalPointOptions& opts = {});

struct SlowFlowPoint {
    Vector x;     ///< h(y)
    Vector ydot;  ///< g(h(y), y, 0)
    Matrix dh;    ///< Dh(y) = -(D_x f)^{-1} D_y f
};

/// Reduced flow y' = g(h(y), y, 0) with h found by critical_point.
[[nodiscard]] SlowFlowPoint slow_flow_field(const SlowFastSystem& system, const Vector& y, const Vector& x_guess);

}  // namespace smst
