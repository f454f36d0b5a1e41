#include "smst/models/morris_lecar.hpp"

#include <cmath>

namespace smst::models {

namespace {

constexpr double kCalciumHalf = -0.01;
constexpr double kCalciumSlope = 0.15;
constexpr double kPotassiumHalf = 0.1;
constexpr double kPotassiumSlope = 0.145;
constexpr double kRateScale = 0.29;
constexpr double kRate = 1.15;

double m_inf_slope(double v) {
    const double c = std::cosh((v - kCalciumHalf) / kCalciumSlope);
    return 0.5 / (kCalciumSlope * c * c);
}

double w_inf_slope(double v) {
    const double c = std::cosh((v - kPotassiumHalf) / kPotassiumSlope);
    return 0.5 / (kPotassiumSlope * c * c);
}

// Fast-time right-hand side of (v, w) and its Jacobian in (v, w, I).
Eigen::Vector2d excitable(double v, double w, double current) {
    const double dv = current - 0.5 * (v + 0.5) - 2.0 * w * (v + 0.7) - ml_m_inf(v) * (v - 1.0);
    const double dw = kRate * (ml_w_inf(v) - w) * std::cosh((v - kPotassiumHalf) / kRateScale);
    return {dv, dw};
}

Eigen::Matrix<double, 2, 3> excitable_jacobian(double v, double w) {
    const double arg = (v - kPotassiumHalf) / kRateScale;
    Eigen::Matrix<double, 2, 3> j;
    j(0, 0) = -0.5 - 2.0 * w - m_inf_slope(v) * (v - 1.0) - ml_m_inf(v);
    j(0, 1) = -2.0 * (v + 0.7);
    j(0, 2) = 1.0;
    j(1, 0) = kRate * (w_inf_slope(v) * std::cosh(arg) + (ml_w_inf(v) - w) * std::sinh(arg) / kRateScale);
    j(1, 1) = -kRate * std::cosh(arg);
    j(1, 2) = 0.0;
    return j;
}

double drive_gap(double k, double v, const Vector& z) {
    const double gap = k - v;
    if (gap == 0.0) fail(ErrorKind::model_evaluation, "rescaled Morris-Lecar field is singular at v = k", z);
    return gap;
}

std::map<std::string, double> param_map(const MorrisLecarParams& p) {
    return {{"k", p.k}, {"epsilon", p.epsilon}};
}

}  // namespace

double ml_m_inf(double v) { return 0.5 * (1.0 + std::tanh((v - kCalciumHalf) / kCalciumSlope)); }
double ml_w_inf(double v) { return 0.5 * (1.0 + std::tanh((v - kPotassiumHalf) / kPotassiumSlope)); }

double ml_critical_current(double v) {
    return 0.5 * (v + 0.5) + 2.0 * ml_w_inf(v) * (v + 0.7) + ml_m_inf(v) * (v - 1.0);
}

double ml_critical_current_slope(double v) {
    return 0.5 + 2.0 * w_inf_slope(v) * (v + 0.7) + 2.0 * ml_w_inf(v) + m_inf_slope(v) * (v - 1.0) + ml_m_inf(v);
}

Vector ml_critical_curve(double v) { return Vector{{v, ml_w_inf(v), ml_critical_current(v)}}; }

Vector ml_field(const Vector& z, const MorrisLecarParams& params) {
    const Eigen::Vector2d fast = excitable(z[0], z[1], z[2]);
    return Vector{{fast[0] / params.epsilon, fast[1] / params.epsilon, params.k - z[0]}};
}

Vector ml_rescaled_field(const Vector& z, const MorrisLecarParams& params) {
    const double gap = drive_gap(params.k, z[0], z);
    const Eigen::Vector2d fast = excitable(z[0], z[1], z[2]) / gap;
    return Vector{{fast[0] / params.epsilon, fast[1] / params.epsilon, 1.0}};
}

SlowFastSystem ml_system(const MorrisLecarParams& params) {
    require(params.epsilon > 0.0, "Morris-Lecar: epsilon must be > 0");
    const double k = params.k;
    SlowFastSystem::Definition def;
    def.name = "morris_lecar";
    def.m = 2;
    def.n = 1;
    def.epsilon = params.epsilon;
    def.fast_field = [](const Vector& x, const Vector& y, double) -> Vector { return excitable(x[0], x[1], y[0]); };
    def.slow_field = [k](const Vector& x, const Vector&, double) { return Vector{{k - x[0]}}; };
    def.fast_jacobian = [](const Vector& x, const Vector&, double) -> Matrix {
        return excitable_jacobian(x[0], x[1]).leftCols<2>();
    };
    def.full_jacobian = [](const Vector& x, const Vector&, double) {
        Matrix j = Matrix::Zero(3, 3);
        j.topRows<2>() = excitable_jacobian(x[0], x[1]);
        j(2, 0) = -1.0;
        return j;
    };
    def.params = param_map(params);
    return SlowFastSystem(std::move(def));
}

SlowFastSystem ml_rescaled_system(const MorrisLecarParams& params) {
    require(params.epsilon > 0.0, "Morris-Lecar: epsilon must be > 0");
    const double k = params.k;
    SlowFastSystem::Definition def;
    def.name = "morris_lecar_rescaled";
    def.m = 2;
    def.n = 1;
    def.epsilon = params.epsilon;
    def.fast_field = [k](const Vector& x, const Vector& y, double) -> Vector {
        const double gap = drive_gap(k, x[0], Vector{{x[0], x[1], y[0]}});
        return excitable(x[0], x[1], y[0]) / gap;
    };
    def.slow_field = [](const Vector&, const Vector&, double) { return Vector{{1.0}}; };
    def.full_jacobian = [k](const Vector& x, const Vector& y, double) {
        const double gap = drive_gap(k, x[0], Vector{{x[0], x[1], y[0]}});
        Matrix j = Matrix::Zero(3, 3);
        j.topRows<2>() = excitable_jacobian(x[0], x[1]) / gap;
        j.block<2, 1>(0, 0) += excitable(x[0], x[1], y[0]) / (gap * gap);
        return j;
    };
    def.params = param_map(params);
    return SlowFastSystem(std::move(def));
}

std::vector<double> ml_folds() {
    std::vector<double> folds;
    constexpr int samples = 2000;
    double prev_v = -0.5;
    double prev = ml_critical_current_slope(prev_v);
    for (int i = 1; i <= samples; ++i) {
        const double v = -0.5 + i * (1.0 / samples);
        const double cur = ml_critical_current_slope(v);
        if ((prev < 0.0) != (cur < 0.0)) {
            double lo = prev_v, hi = v;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                ((ml_critical_current_slope(mid) < 0.0) == (prev < 0.0) ? lo : hi) = mid;
            }
            folds.push_back(0.5 * (lo + hi));
        }
        prev = cur;
        prev_v = v;
    }
    return folds;
}

}  // namespace smst::models
