#pragma once

// Test-side reference computations. Nothing here calls into the library's own
// difference or interpolation helpers.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "smst/core.hpp"

namespace oracle {

using smst::Matrix;
using smst::Vector;

/// Central differences of fn at z with a fixed relative step.
inline Matrix central_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& z, double rel = 1e-6) {
    const Vector f0 = fn(z);
    Matrix jac(f0.size(), z.size());
    for (Eigen::Index c = 0; c < z.size(); ++c) {
        const double h = rel * std::max(1.0, std::abs(z[c]));
        Vector zp = z, zm = z;
        zp[c] += h;
        zm[c] -= h;
        jac.col(c) = (fn(zp) - fn(zm)) / (2.0 * h);
    }
    return jac;
}

/// Relative max-norm distance ||a - b|| / max(||a||, tiny).
inline double rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Deterministic uniform samples in a box.
class Sampler {
public:
    explicit Sampler(unsigned seed) : gen_(seed) {}

    Vector in_box(const std::vector<double>& lo, const std::vector<double>& hi) {
        Vector z(static_cast<Eigen::Index>(lo.size()));
        for (size_t i = 0; i < lo.size(); ++i) z[static_cast<Eigen::Index>(i)] = uniform(lo[i], hi[i]);
        return z;
    }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

private:
    std::mt19937_64 gen_;
};

/// Cubic Hermite interpolant on [ta, tb] evaluated at t, with its derivative,
/// from the standard basis polynomials.
struct Hermite {
    Vector value;
    Vector slope;
};

inline Hermite hermite(const Vector& za, const Vector& zb, const Vector& fa, const Vector& fb, double ta, double tb,
                       double t) {
    const double h = tb - ta;
    const double s = (t - ta) / h;
    const double h00 = 2 * s * s * s - 3 * s * s + 1;
    const double h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s;
    const double h11 = s * s * s - s * s;
    const double d00 = (6 * s * s - 6 * s) / h;
    const double d10 = (3 * s * s - 4 * s + 1) / h;
    const double d01 = (-6 * s * s + 6 * s) / h;
    const double d11 = (3 * s * s - 2 * s) / h;
    return {h00 * za + h10 * h * fa + h01 * zb + h11 * h * fb, d00 * za + d10 * h * fa + d01 * zb + d11 * h * fb};
}

}  // namespace oracle
