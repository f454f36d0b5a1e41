#pragma once

// Adaptive initial-value integration: Dormand-Prince 5(4) with PI step-size
// control and the standard free fourth-order continuous extension, plus
// event location on the dense output.

#include <functional>
#include <limits>
#include <utility>

#include "smst/core.hpp"

namespace smst::ivp {

struct IvpOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 10'000'000;
    bool dense_output = true;
    /// Integration stops with a left_domain error once |z|_inf exceeds this.
    double state_bound = std::numeric_limits<double>::infinity();

    void validate() const;
};

/// Right-hand side on a generic state, t -> dz/dt.
using Rhs = std::function<Vector(double t, const Vector& z)>;

/// An integrated orbit. Knots are stored in integration order, so `times` is
/// decreasing for backward integration.
class Orbit {
public:
    Orbit(double t0, Vector z0);

    [[nodiscard]] int knots() const noexcept { return static_cast<int>(times_.size()); }
    [[nodiscard]] double t(int i) const { return times_[static_cast<size_t>(i)]; }
    [[nodiscard]] const Vector& z(int i) const { return states_[static_cast<size_t>(i)]; }
    [[nodiscard]] double start_time() const { return times_.front(); }
    [[nodiscard]] double end_time() const { return times_.back(); }
    [[nodiscard]] const Vector& start() const { return states_.front(); }
    [[nodiscard]] const Vector& end() const { return states_.back(); }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<Vector>& states() const noexcept { return states_; }
    [[nodiscard]] bool has_dense() const noexcept { return dense_.size() + 1 == times_.size(); }

    /// Dense-output value at t inside the integrated span.
    [[nodiscard]] Vector at(double t) const;
    /// Dense value inside step i at fraction theta in [0, 1].
    [[nodiscard]] Vector at_step(int i, double theta) const;

    /// Knots re-ordered by increasing time. Needs at least two knots.
    [[nodiscard]] TrajectorySegment segment() const;

    /// Drops everything after t (inside step i) and appends the dense value at t.
    void truncate(int step, double theta);

    void push(double t, Vector z, Matrix dense_coeffs);

private:
    std::vector<double> times_;
    std::vector<Vector> states_;
    std::vector<Matrix> dense_;  // per step: h * K^T P, d x 4
};

/// Integrates dz/dt = rhs from (t0, z0) to t1 (t1 < t0 integrates backward).
[[nodiscard]] Orbit integrate(const Rhs& rhs, const Vector& z0, double t0, double t1, const IvpOptions& opts = {});

/// Integrates the slow-time field F = (f/eps, g) over `span` starting at t = 0.
[[nodiscard]] Orbit integrate(const SlowFastSystem& system, const Vector& z0, double span,
                              const IvpOptions& opts = {});

struct BoundedOrbit {
    Orbit orbit;
    /// True when the run ended because |z|_inf exceeded opts.state_bound.
    bool escaped = false;
};

/// As integrate(system, ...), but leaving the state bound ends the orbit at
/// its last in-bound knot instead of throwing.
[[nodiscard]] BoundedOrbit integrate_bounded(const SlowFastSystem& system, const Vector& z0, double span,
                                             const IvpOptions& opts);

[[nodiscard]] Rhs field_of(const SlowFastSystem& system);

enum class Direction { increasing, decreasing, either };

/// Level set { l . z = level } crossed in the given sense of physical (forward)
/// time; a crossing met during backward integration is classified by the
/// forward-time sense.
struct Section {
    Vector functional;
    double level = 0.0;
    Direction direction = Direction::either;

    static Section coordinate(int index, int dim, double level, Direction direction);
    [[nodiscard]] double value(const Vector& z) const { return functional.dot(z) - level; }
    [[nodiscard]] double scale() const { return std::max(1.0, std::abs(level)); }
};

/// General scalar event g(t, z) = 0 with a forward-time crossing sense.
struct Event {
    std::function<double(double t, const Vector& z)> g;
    Direction direction = Direction::either;
    /// Refinement stops when |g| <= tolerance.
    double tolerance = 1e-12;
};

struct EventHit {
    Vector point;
    double time = 0.0;
    Orbit orbit;  ///< truncated at the hit
};

/// Integrates from t0 towards t_end and stops at the first crossing. The
/// initial point never counts as a directional crossing.
[[nodiscard]] EventHit integrate_to_event(const Rhs& rhs, const Vector& z0, double t0, double t_end,
                                          const Event& event, const IvpOptions& opts = {});

/// Integrates the system until it meets the section; t_max < 0 integrates
/// backward. A point already on the section counts only for Direction::either.
[[nodiscard]] EventHit integrate_to_section(const SlowFastSystem& system, const Vector& z0, const Section& section,
                                            const IvpOptions& opts, double t_max);

/// (base + d * direction, base - d * direction); direction must be a unit vector.
[[nodiscard]] std::pair<Vector, Vector> displaced_pair(const Vector& base, const Vector& direction, double distance);

}  // namespace smst::ivp
