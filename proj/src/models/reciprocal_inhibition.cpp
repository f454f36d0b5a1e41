#include "smst/models/reciprocal_inhibition.hpp"

#include <cmath>

namespace smst::models {

double ri_synapse(double x, const ReciprocalInhibitionParams& params) {
    return 1.0 / (1.0 + std::exp(-4.0 * params.gamma * (x - params.theta)));
}

namespace {

double synapse_slope(double x, const ReciprocalInhibitionParams& params) {
    const double f = ri_synapse(x, params);
    return 4.0 * params.gamma * f * (1.0 - f);
}

double gain(int i, const ReciprocalInhibitionParams& params) { return i == 0 ? params.sigma1 : params.sigma2; }

}  // namespace

Eigen::Vector2d ri_h(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params) {
    Eigen::Vector2d q;
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        q[i] = params.a * std::tanh(gain(i, params) * v[i] / params.a) - v[i] -
               params.omega * ri_synapse(v[j], params) * (v[i] - params.r);
    }
    return q;
}

Eigen::Matrix2d ri_dh(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params) {
    Eigen::Matrix2d d;
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const double c = std::cosh(gain(i, params) * v[i] / params.a);
        d(i, i) = gain(i, params) / (c * c) - 1.0 - params.omega * ri_synapse(v[j], params);
        d(i, j) = -params.omega * synapse_slope(v[j], params) * (v[i] - params.r);
    }
    return d;
}

Vector ri_lift(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params) {
    const Eigen::Vector2d q = ri_h(v, params);
    return Vector{{v[0], v[1], q[0], q[1]}};
}

Eigen::Vector2d ri_slow_flow(const Eigen::Vector2d& v, const ReciprocalInhibitionParams& params) {
    const Eigen::Matrix2d d = ri_dh(v, params);
    const double det = d.determinant();
    if (std::abs(det) <= kHyperbolicityTolerance * std::max(1.0, d.cwiseAbs().maxCoeff()))
        fail(ErrorKind::fold_singularity, "reciprocal inhibition: Dh is singular", ri_lift(v, params));
    return d.inverse() * (params.s * v - ri_h(v, params));
}

SlowFastSystem ri_system(const ReciprocalInhibitionParams& params) {
    require(params.epsilon > 0.0, "reciprocal inhibition: epsilon must be > 0");
    require(params.a != 0.0, "reciprocal inhibition: a must be nonzero");
    SlowFastSystem::Definition def;
    def.name = "reciprocal_inhibition";
    def.m = 2;
    def.n = 2;
    def.epsilon = params.epsilon;
    def.fast_field = [params](const Vector& x, const Vector& y, double) -> Vector {
        return ri_h(x.head<2>(), params) - y.head<2>();
    };
    def.slow_field = [params](const Vector& x, const Vector& y, double) -> Vector {
        return params.s * x.head<2>() - y.head<2>();
    };
    def.fast_jacobian = [params](const Vector& x, const Vector&, double) -> Matrix {
        return ri_dh(x.head<2>(), params);
    };
    def.full_jacobian = [params](const Vector& x, const Vector&, double) {
        Matrix j = Matrix::Zero(4, 4);
        j.topLeftCorner<2, 2>() = ri_dh(x.head<2>(), params);
        j.topRightCorner<2, 2>() = -Eigen::Matrix2d::Identity();
        j.bottomLeftCorner<2, 2>() = params.s * Eigen::Matrix2d::Identity();
        j.bottomRightCorner<2, 2>() = -Eigen::Matrix2d::Identity();
        return j;
    };
    def.params = {{"omega", params.omega}, {"gamma", params.gamma}, {"r", params.r},
                  {"theta", params.theta}, {"a", params.a},         {"s", params.s},
                  {"sigma1", params.sigma1}, {"sigma2", params.sigma2}, {"epsilon", params.epsilon}};
    return SlowFastSystem(std::move(def));
}

}  // namespace smst::models
