#include "smst/ivp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace smst::ivp {

void IvpOptions::validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, "integration tolerances must be > 0");
    require(max_step > 0.0, "max_step must be > 0");
    require(max_steps >= 1, "max_steps must be >= 1");
    require(state_bound > 0.0, "state_bound must be > 0");
}

// ---------------------------------------------------------------------------

Orbit::Orbit(double t0, Vector z0) {
    times_.push_back(t0);
    states_.push_back(std::move(z0));
}

void Orbit::push(double t, Vector z, Matrix dense_coeffs) {
    times_.push_back(t);
    states_.push_back(std::move(z));
    if (dense_coeffs.size()) dense_.push_back(std::move(dense_coeffs));
}

Vector Orbit::at_step(int i, double theta) const {
    require(has_dense(), "orbit was integrated without dense output");
    require(i >= 0 && i + 1 < knots(), "dense step index out of range");
    const Matrix& q = dense_[static_cast<size_t>(i)];
    const Eigen::Vector4d powers(theta, theta * theta, theta * theta * theta, theta * theta * theta * theta);
    return z(i) + q * powers;
}

Vector Orbit::at(double t) const {
    require(knots() >= 2, "orbit has a single knot");
    const bool forward = end_time() >= start_time();
    const double lo = forward ? start_time() : end_time();
    const double hi = forward ? end_time() : start_time();
    require(t >= lo && t <= hi, "Orbit::at: t outside the integrated span");
    // Knot times are monotone in integration order.
    int a = 0;
    int b = knots() - 1;
    while (b - a > 1) {
        const int mid = (a + b) / 2;
        const bool before = forward ? (this->t(mid) <= t) : (this->t(mid) >= t);
        (before ? a : b) = mid;
    }
    const double theta = (t - this->t(a)) / (this->t(b) - this->t(a));
    return at_step(a, std::clamp(theta, 0.0, 1.0));
}

TrajectorySegment Orbit::segment() const {
    require(knots() >= 2, "orbit has a single knot; no segment");
    std::vector<double> t = times_;
    std::vector<Vector> z = states_;
    if (end_time() < start_time()) {
        std::reverse(t.begin(), t.end());
        std::reverse(z.begin(), z.end());
    }
    return TrajectorySegment(Mesh(std::move(t)), std::move(z));
}

void Orbit::truncate(int step, double theta) {
    require(step >= 0 && step + 1 < knots(), "truncate: step out of range");
    const double tc = t(step) + theta * (t(step + 1) - t(step));
    Vector zc = at_step(step, theta);
    Matrix qc;
    if (has_dense()) {
        // Re-parametrise the cut step so its dense output covers [t_step, tc].
        const Matrix& q = dense_[static_cast<size_t>(step)];
        qc = q;
        double p = theta;
        for (int c = 0; c < 4; ++c, p *= theta) qc.col(c) = q.col(c) * p;
    }
    times_.resize(static_cast<size_t>(step) + 1);
    states_.resize(static_cast<size_t>(step) + 1);
    if (has_dense() || !dense_.empty()) dense_.resize(static_cast<size_t>(step));
    if (theta > 0.0) push(tc, std::move(zc), std::move(qc));
}

// ---------------------------------------------------------------------------

namespace {

// Dormand-Prince 5(4).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = -71.0 / 57600, e3 = 71.0 / 16695, e4 = -71.0 / 1920, e5 = 17253.0 / 339200,
                 e6 = -22.0 / 525, e7 = 1.0 / 40;

// Continuous extension: y(t + theta h) = y + h K P [theta .. theta^4].
const Eigen::Matrix<double, 7, 4>& dense_matrix() {
    static const Eigen::Matrix<double, 7, 4> p = [] {
        Eigen::Matrix<double, 7, 4> m;
        m << 1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0,  //
            0.0, 0.0, 0.0, 0.0,                                                                              //
            0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
            87487479700.0 / 32700410799.0,  //
            0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
            -10690763975.0 / 1880347072.0,  //
            0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
            701980252875.0 / 199316789632.0,                                                              //
            0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0,  //
            0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0;
        return m;
    }();
    return p;
}

double rms_scaled(const Vector& v, const Vector& y0, const Vector& y1, const IvpOptions& opts) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = v[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(v.size()));
}

Vector eval(const Rhs& rhs, double t, const Vector& z) {
    Vector f = rhs(t, z);
    if (!f.allFinite()) fail(ErrorKind::non_finite_state, "non-finite right-hand side", z);
    return f;
}

double initial_step(const Rhs& rhs, double t0, const Vector& y0, const Vector& f0, double span, const IvpOptions& opts) {
    const double d0 = rms_scaled(y0, y0, y0, opts);
    const double d1 = rms_scaled(f0, y0, y0, opts);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, std::abs(span), opts.max_step});
    const double dir = span >= 0 ? 1.0 : -1.0;
    const Vector y1 = y0 + dir * h0 * f0;
    const Vector f1 = eval(rhs, t0 + dir * h0, y1);
    const double d2 = rms_scaled(f1 - f0, y0, y0, opts) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, std::abs(span), opts.max_step});
}

/// Observer: called after each accepted step with the step index; returns true to stop.
using StepObserver = std::function<bool(const Orbit&, int step)>;

/// With `escaped` set, leaving the state bound ends the run instead of throwing.
Orbit run(const Rhs& rhs, const Vector& z0, double t0, double t1, const IvpOptions& opts,
          const StepObserver& observer, bool* escaped = nullptr) {
    opts.validate();
    if (!z0.allFinite()) fail(ErrorKind::non_finite_state, "initial state is not finite", z0);
    Orbit orbit(t0, z0);
    const double span = t1 - t0;
    if (span == 0.0) return orbit;
    const double dir = span > 0 ? 1.0 : -1.0;
    const double min_step = 1e-14 * std::abs(span);

    constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
    double facold = 1e-4;

    double t = t0;
    Vector y = z0;
    Vector k1 = eval(rhs, t, y);
    double h = initial_step(rhs, t0, y, k1, span, opts);
    bool rejected_last = false;
    long steps = 0;
    const auto& p = dense_matrix();

    while (dir * (t1 - t) > 0.0) {
        if (++steps > opts.max_steps)
            fail(ErrorKind::max_steps_exceeded, "max_steps exceeded at t = " + std::to_string(t), y);
        if (h < min_step)
            fail(ErrorKind::stiffness, "step size collapsed at t = " + std::to_string(t), y);
        bool last = false;
        if (h >= std::abs(t1 - t) * (1.0 - 1e-12)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;
        const Vector k2 = eval(rhs, t + c2 * hs, y + hs * (a21 * k1));
        const Vector k3 = eval(rhs, t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
        const Vector k4 = eval(rhs, t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vector k5 = eval(rhs, t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vector k6 = eval(rhs, t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vector y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double t_new = last ? t1 : t + hs;
        const Vector k7 = eval(rhs, t_new, y_new);
        const Vector err_vec = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = rms_scaled(err_vec, y, y_new, opts);

        const double fac11 = std::pow(std::max(err, 1e-300), expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            double h_new = h / fac;
            if (rejected_last) h_new = std::min(h_new, h);
            facold = std::max(err, 1e-4);
            rejected_last = false;

            Matrix dense;
            if (opts.dense_output) {
                Eigen::Matrix<double, Eigen::Dynamic, 7> k(y.size(), 7);
                k << k1, Vector::Zero(y.size()), k3, k4, k5, k6, k7;
                dense = hs * (k * p);
            }
            if (y_new.lpNorm<Eigen::Infinity>() > opts.state_bound) {
                if (escaped) {
                    *escaped = true;
                    return orbit;
                }
                fail(ErrorKind::left_domain, "state left the bound at t = " + std::to_string(t_new), y_new);
            }
            orbit.push(t_new, y_new, std::move(dense));
            t = t_new;
            y = y_new;
            k1 = k7;
            h = std::min(h_new, opts.max_step);
            if (observer && observer(orbit, orbit.knots() - 2)) return orbit;
        } else {
            h = h / std::min(facc1, fac11 / safe);
            rejected_last = true;
        }
    }
    return orbit;
}

bool matches(Direction wanted, bool rising_in_integration, double dir) {
    if (wanted == Direction::either) return true;
    const bool increasing = rising_in_integration == (dir > 0);
    return (wanted == Direction::increasing) == increasing;
}

}  // namespace

Orbit integrate(const Rhs& rhs, const Vector& z0, double t0, double t1, const IvpOptions& opts) {
    return run(rhs, z0, t0, t1, opts, {});
}

Rhs field_of(const SlowFastSystem& system) {
    return [&system](double, const Vector& z) { return assemble_field(system, z); };
}

Orbit integrate(const SlowFastSystem& system, const Vector& z0, double span, const IvpOptions& opts) {
    require(z0.size() == system.dim(), "initial state dimension mismatch");
    return run(field_of(system), z0, 0.0, span, opts, {});
}

BoundedOrbit integrate_bounded(const SlowFastSystem& system, const Vector& z0, double span, const IvpOptions& opts) {
    require(z0.size() == system.dim(), "initial state dimension mismatch");
    bool escaped = false;
    Orbit orbit = run(field_of(system), z0, 0.0, span, opts, {}, &escaped);
    return {std::move(orbit), escaped};
}

Section Section::coordinate(int index, int dim, double level, Direction direction) {
    require(index >= 0 && index < dim, "section coordinate index out of range");
    Section s;
    s.functional = Vector::Zero(dim);
    s.functional[index] = 1.0;
    s.level = level;
    s.direction = direction;
    return s;
}

EventHit integrate_to_event(const Rhs& rhs, const Vector& z0, double t0, double t_end, const Event& event,
                            const IvpOptions& opts) {
    require(static_cast<bool>(event.g), "event function is required");
    const double g0 = event.g(t0, z0);
    if (event.direction == Direction::either && std::abs(g0) <= event.tolerance) return {z0, t0, Orbit(t0, z0)};

    const double dir = t_end >= t0 ? 1.0 : -1.0;
    IvpOptions dense_opts = opts;
    dense_opts.dense_output = true;

    double g_prev = g0;
    std::optional<int> hit_step;
    double hit_theta = 0.0;
    auto observer = [&](const Orbit& orbit, int step) {
        const double g_new = event.g(orbit.t(step + 1), orbit.z(step + 1));
        const bool crossed = (g_prev < 0.0 && g_new >= 0.0) || (g_prev > 0.0 && g_new <= 0.0);
        const bool rising = g_new > g_prev;
        const double g_start = g_prev;
        g_prev = g_new;
        if (!crossed || !matches(event.direction, rising, dir)) return false;
        // Bisection on the dense output of this step.
        double lo = 0.0, hi = 1.0;
        double g_lo = g_start;
        double theta = 1.0;
        if (std::abs(g_new) > event.tolerance) {
            for (int it = 0; it < 200; ++it) {
                theta = 0.5 * (lo + hi);
                const double t_mid = orbit.t(step) + theta * (orbit.t(step + 1) - orbit.t(step));
                const double g_mid = event.g(t_mid, orbit.at_step(step, theta));
                if (std::abs(g_mid) <= event.tolerance || hi - lo < 1e-17) break;
                if ((g_mid < 0.0) == (g_lo < 0.0)) {
                    lo = theta;
                    g_lo = g_mid;
                } else {
                    hi = theta;
                }
            }
        }
        hit_step = step;
        hit_theta = theta;
        return true;
    };
    Orbit orbit = run(rhs, z0, t0, t_end, dense_opts, observer);
    if (!hit_step)
        fail(ErrorKind::no_crossing, "no event crossing before t = " + std::to_string(t_end), orbit.end());
    orbit.truncate(*hit_step, hit_theta);
    return {orbit.end(), orbit.end_time(), std::move(orbit)};
}

EventHit integrate_to_section(const SlowFastSystem& system, const Vector& z0, const Section& section,
                              const IvpOptions& opts, double t_max) {
    require(section.functional.size() == system.dim(), "section functional dimension mismatch");
    require(section.functional.lpNorm<Eigen::Infinity>() > 0.0, "section functional must be nonzero");
    Event event;
    event.g = [&section](double, const Vector& z) { return section.value(z); };
    event.direction = section.direction;
    event.tolerance = 1e-12 * section.scale();
    return integrate_to_event(field_of(system), z0, 0.0, t_max, event, opts);
}

std::pair<Vector, Vector> displaced_pair(const Vector& base, const Vector& direction, double distance) {
    require(base.size() == direction.size(), "displaced_pair: dimension mismatch");
    require(std::abs(direction.norm() - 1.0) <= 1e-12, "displaced_pair: direction must be a unit vector");
    return {base + distance * direction, base - distance * direction};
}

}  // namespace smst::ivp
