#include "smst/models/linear.hpp"

#include <cmath>

namespace smst::models {

SlowFastSystem linear_system(const LinearParams& params) {
    SlowFastSystem::Definition def;
    def.name = "linear";
    def.m = 2;
    def.n = 1;
    def.epsilon = params.epsilon;
    def.fast_field = [](const Vector& x, const Vector& y, double) {
        return Vector{{y[0] - x[0], x[1]}};
    };
    def.slow_field = [](const Vector&, const Vector&, double) { return Vector{{1.0}}; };
    def.fast_jacobian = [](const Vector&, const Vector&, double) {
        return Matrix{{-1.0, 0.0}, {0.0, 1.0}};
    };
    def.full_jacobian = [](const Vector&, const Vector&, double) {
        return Matrix{{-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}};
    };
    def.params = {{"epsilon", params.epsilon}};
    return SlowFastSystem(std::move(def));
}

Vector linear_exact(const Vector& z0, double t, double eps) {
    require(z0.size() == 3, "linear_exact: state must have 3 components");
    require(eps > 0.0, "linear_exact: epsilon must be > 0");
    const double grow = std::exp(t / eps);
    const double x2 = z0[1] * grow;
    if (!std::isfinite(grow) || !std::isfinite(x2))
        fail(ErrorKind::model_evaluation, "linear_exact: exp(t/eps) overflows", z0);
    const double y0 = z0[2];
    return Vector{{(y0 - eps + t) + (z0[0] - y0 + eps) * std::exp(-t / eps), x2, y0 + t}};
}

double linear_ratio(double delta, double eps) {
    require(delta > 0.0 && eps > 0.0, "linear_ratio: delta and eps must be > 0");
    const double d2 = delta * delta;
    const double de = 6.0 * delta * eps;
    const double e2 = 12.0 * eps * eps;
    return (d2 - de + e2) / (d2 + de + e2);
}

Vector linear_critical(double y) { return Vector{{y, 0.0, y}}; }

}  // namespace smst::models
