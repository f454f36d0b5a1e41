#include "smst/models/fhn.hpp"

#include <cmath>

namespace smst::models {

double fhn_cubic(double u) { return u * (u - 1.0) * (0.1 - u); }
double fhn_cubic_slope(double u) { return -3.0 * u * u + 2.2 * u - 0.1; }

Vector fhn_critical(double x1, double p) { return Vector{{x1, 0.0, fhn_cubic(x1) + p}}; }

std::pair<double, double> fhn_folds() {
    const double root = std::sqrt(2.2 * 2.2 - 4.0 * 3.0 * 0.1);
    return {(2.2 - root) / 6.0, (2.2 + root) / 6.0};
}

double fhn_section_level() {
    const auto [lo, hi] = fhn_folds();
    return 0.5 * (lo + hi);
}

Vector fhn_equilibrium(double p) {
    // cubic(x) + p - x is strictly decreasing, so bisection on a wide bracket suffices.
    auto residual = [p](double x) { return fhn_cubic(x) + p - x; };
    double lo = -10.0, hi = 10.0;
    require(residual(lo) > 0.0 && residual(hi) < 0.0, "fhn_equilibrium: |p| too large");
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    const double x = 0.5 * (lo + hi);
    return Vector{{x, 0.0, x}};
}

double fhn_chart_rate(double x1, const FhnParams& params) {
    const double slope = fhn_cubic_slope(x1);
    if (std::abs(slope) <= kHyperbolicityTolerance)
        fail(ErrorKind::fold_singularity, "FitzHugh-Nagumo chart rate at a fold", fhn_critical(x1, params.p));
    return (x1 - (fhn_cubic(x1) + params.p)) / (params.s * slope);
}

SlowFastSystem fhn_system(const FhnParams& params) {
    require(params.s != 0.0, "FitzHugh-Nagumo: wave speed s must be nonzero");
    require(params.epsilon > 0.0, "FitzHugh-Nagumo: epsilon must be > 0");
    const double p = params.p;
    const double s = params.s;
    SlowFastSystem::Definition def;
    def.name = "fhn";
    def.m = 2;
    def.n = 1;
    def.epsilon = params.epsilon;
    def.fast_field = [p, s](const Vector& x, const Vector& y, double) {
        return Vector{{x[1], (s * x[1] - fhn_cubic(x[0]) + y[0] - p) / 5.0}};
    };
    def.slow_field = [s](const Vector& x, const Vector& y, double) { return Vector{{(x[0] - y[0]) / s}}; };
    def.fast_jacobian = [s](const Vector& x, const Vector&, double) {
        return Matrix{{0.0, 1.0}, {-fhn_cubic_slope(x[0]) / 5.0, s / 5.0}};
    };
    def.full_jacobian = [s](const Vector& x, const Vector&, double) {
        return Matrix{{0.0, 1.0, 0.0}, {-fhn_cubic_slope(x[0]) / 5.0, s / 5.0, 0.2}, {1.0 / s, 0.0, -1.0 / s}};
    };
    def.params = {{"p", p}, {"s", s}, {"epsilon", params.epsilon}};
    return SlowFastSystem(std::move(def));
}

}  // namespace smst::models
