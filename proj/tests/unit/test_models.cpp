#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smst/ivp.hpp"
#include "smst/models/fhn.hpp"
#include "smst/models/linear.hpp"
#include "smst/models/morris_lecar.hpp"
#include "smst/models/reciprocal_inhibition.hpp"

using namespace smst;

namespace {

double max_abs(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

/// Morris-Lecar in fast time, written out independently of the library.
Vector ml_fast_time(const Vector& z, double k, double eps) {
    const double v = z[0], w = z[1], current = z[2];
    const double m_inf = 0.5 * (1 + std::tanh((v + 0.01) / 0.15));
    const double w_inf = 0.5 * (1 + std::tanh((v - 0.1) / 0.145));
    return Vector{{current - 0.5 * (v + 0.5) - 2 * w * (v + 0.7) - m_inf * (v - 1),
                   1.15 * (w_inf - w) * std::cosh((v - 0.1) / 0.29), eps * (k - v)}};
}

double cubic(double u) { return u * (u - 1) * (0.1 - u); }
double cubic_slope(double u) { return -3 * u * u + 2.2 * u - 0.1; }

}  // namespace

TEST_CASE("linear closed form") {
    const double eps = 0.05;
    const Vector on{{0.3 - eps, 0.0, 0.3}};
    for (double t : {0.0, 0.2, 1.7}) CHECK(max_abs(models::linear_exact(on, t, eps) - Vector{{0.3 - eps + t, 0.0, 0.3 + t}}) < 1e-15);
    const Vector z0{{0.4, -0.2, 1.0}};
    CHECK(max_abs(models::linear_exact(z0, 0.0, eps) - z0) == 0.0);
    const Vector zero = Vector::Zero(3);
    const auto z1 = models::linear_exact(zero, 1.0, 0.01);
    CHECK(z1[0] == doctest::Approx(0.99 + 0.01 * std::exp(-100.0)).epsilon(1e-15));
    CHECK(z1[2] == 1.0);
    CHECK_THROWS_AS((void)models::linear_exact(Vector{{0.0, 1.0, 0.0}}, 10.0, 1e-3), Error);
}

TEST_CASE("linear decay factor") {
    CHECK(models::linear_ratio(1.0, 1.0) == doctest::Approx(7.0 / 19.0).epsilon(1e-15));
    CHECK((7.0 / 19.0 - std::exp(-1.0)) / std::exp(-1.0) == doctest::Approx(0.00147).epsilon(0.01));
    CHECK(models::linear_ratio(1e-12, 1.0) == doctest::Approx(1.0).epsilon(1e-11));
    for (double d = 1e-3; d < 1e3; d *= 1.7)
        for (double e : {1e-4, 0.01, 1.0}) {
            const double r = models::linear_ratio(d * e, e);
            CHECK(r > 0.0);
            CHECK(r < 1.0);
        }
    // Fifth-order agreement with exp: a tenfold smaller step shrinks the gap 1e5-fold.
    const double e1 = std::abs(models::linear_ratio(0.1, 1.0) - std::exp(-0.1));
    const double e2 = std::abs(models::linear_ratio(0.01, 1.0) - std::exp(-0.01));
    CHECK(e1 / e2 > 0.8e5);
    CHECK(e1 / e2 < 1.25e5);
}

TEST_CASE("Morris-Lecar field transcription") {
    oracle::Sampler rng(2);
    const models::MorrisLecarParams p{-0.22, 0.002};
    for (int i = 0; i < 50; ++i) {
        const Vector z = rng.in_box({-0.4, 0.0, 0.0}, {0.3, 1.0, 0.2});
        const Vector fast_time = ml_fast_time(z, p.k, p.epsilon);
        const Vector expect = fast_time / p.epsilon;
        CHECK(max_abs(models::ml_field(z, p) - expect) <= 1e-12 * std::max(1.0, max_abs(expect)));
        const Vector rescaled = models::ml_rescaled_field(z, p);
        CHECK(rescaled[2] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(max_abs(rescaled - expect / (p.k - z[0])) <= 1e-12 * std::max(1.0, max_abs(rescaled)));
        CHECK(max_abs(assemble_field(models::ml_system(p), z) - expect) <= 1e-12 * std::max(1.0, max_abs(expect)));
    }
    CHECK_THROWS_AS((void)models::ml_rescaled_field(Vector{{p.k, 0.1, 0.05}}, p), Error);
}

TEST_CASE("Morris-Lecar recovery rate vanishes at w_inf") {
    for (double v = -0.4; v <= 0.3; v += 0.05) {
        const Vector z{{v, models::ml_w_inf(v), 0.1}};
        CHECK(std::abs(ml_fast_time(z, -0.22, 0.002)[1]) < 1e-15);
    }
}

TEST_CASE("Morris-Lecar critical curve zeroes the fast field") {
    const auto sys = models::ml_system({-0.22, 0.002});
    for (double v = -0.45; v <= 0.45; v += 0.01) {
        const Vector z = models::ml_critical_curve(v);
        CHECK(max_abs(sys.fast(z.head(2), z.tail(1), 0.0)) <= 1e-12);
        const double h = 1e-6;
        const double fd = (models::ml_critical_current(v + h) - models::ml_critical_current(v - h)) / (2 * h);
        CHECK(models::ml_critical_current_slope(v) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("Morris-Lecar folds and the reference slow-manifold point") {
    const auto folds = models::ml_folds();
    REQUIRE(folds.size() >= 2);
    for (double f : folds) CHECK(std::abs(models::ml_critical_current_slope(f)) < 1e-10);
    const double eps = 0.002;
    const Vector ref{{-0.109854033586602, 0.052299738361417, 0.025187193494031}};
    const Vector crit = models::ml_critical_curve(ref[0]);
    CHECK(std::abs(crit[1] - ref[1]) <= 5 * eps);
    CHECK(std::abs(crit[2] - ref[2]) <= 5 * eps);
    const auto d = strong_directions(models::ml_system({-0.22, eps}), models::ml_critical_curve(-0.11));
    CHECK(d.u == 1);
}

TEST_CASE("FHN cubic, folds and section level") {
    for (double u = -1.0; u <= 1.5; u += 0.1) {
        CHECK(models::fhn_cubic(u) == doctest::Approx(cubic(u)).epsilon(1e-14));
        CHECK(models::fhn_cubic_slope(u) == doctest::Approx(cubic_slope(u)).epsilon(1e-14));
    }
    const auto [lo, hi] = models::fhn_folds();
    CHECK(lo == doctest::Approx((2.2 - std::sqrt(3.64)) / 6).epsilon(1e-15));
    CHECK(hi == doctest::Approx((2.2 + std::sqrt(3.64)) / 6).epsilon(1e-15));
    CHECK(lo == doctest::Approx(0.0486870).epsilon(1e-6));
    CHECK(hi == doctest::Approx(0.6846463).epsilon(1e-6));
    CHECK(std::abs(cubic_slope(lo)) < 1e-14);
    CHECK(std::abs(cubic_slope(hi)) < 1e-14);
    CHECK(std::abs(-6 * lo + 2.2) > 0.1);
    CHECK(std::abs(-6 * hi + 2.2) > 0.1);
    CHECK(models::fhn_section_level() == doctest::Approx(11.0 / 30.0).epsilon(1e-15));
}

TEST_CASE("FHN critical manifold and equilibrium") {
    const auto sys = models::fhn_system({0.05, 1.2463, 1e-3});
    for (double x1 = -0.4; x1 <= 1.1; x1 += 0.05) {
        const Vector z = models::fhn_critical(x1, 0.05);
        CHECK(z[2] == doctest::Approx(cubic(x1) + 0.05).epsilon(1e-14));
        CHECK(max_abs(sys.fast(z.head(2), z.tail(1), 0.0)) <= 1e-12);
    }
    CHECK(max_abs(models::fhn_equilibrium(0.0)) <= 1e-15);
    const Vector q = models::fhn_equilibrium(0.05);
    CHECK(q[0] == doctest::Approx(q[2]).epsilon(1e-14));
    CHECK(max_abs(assemble_field(sys, q)) <= 1e-12);
}

TEST_CASE("FHN chart rate follows the chain rule") {
    const models::FhnParams p{0.0, 0.29491, 1e-3};
    for (double x1 : {-0.3, -0.1, 0.8, 1.0}) {
        const double c = cubic(x1);
        CHECK(models::fhn_chart_rate(x1, p) == doctest::Approx((x1 - c) / (p.s * cubic_slope(x1))).epsilon(1e-13));
    }
}

TEST_CASE("FHN rejects zero wave speed") {
    CHECK_THROWS_AS((void)models::fhn_system({0.0, 0.0, 1e-3}), Error);
}

TEST_CASE("reciprocal inhibition graph, Jacobian and slow flow") {
    const models::ReciprocalInhibitionParams p;
    const auto sys = models::ri_system(p);
    oracle::Sampler rng(31);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d v(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Vector lifted = models::ri_lift(v, p);
        CHECK(max_abs(lifted.head(2) - Vector(v)) == 0.0);
        CHECK(max_abs(sys.fast(lifted.head(2), lifted.tail(2), p.epsilon)) <= 1e-12);
        const Matrix fd = oracle::central_jacobian([&](const Vector& x) { return Vector(models::ri_h({x[0], x[1]}, p)); },
                                                   Vector(v));
        CHECK(oracle::rel_diff(Matrix(models::ri_dh(v, p)), fd) <= 1e-6);
        try {
            const Eigen::Vector2d vdot = models::ri_slow_flow(v, p);
            CHECK(max_abs(Vector(models::ri_dh(v, p) * vdot - (p.s * v - models::ri_h(v, p)))) <= 1e-12);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::fold_singularity);
        }
    }
}

TEST_CASE("reciprocal inhibition projection of the reference point keeps v") {
    const models::ReciprocalInhibitionParams p;
    const Eigen::Vector2d v(-0.16851015831, 0.85854544475);
    const Vector lifted = models::ri_lift(v, p);
    CHECK(lifted[0] == v[0]);
    CHECK(lifted[1] == v[1]);
    const Eigen::Vector2d q = models::ri_h(v, p);
    CHECK(lifted[2] == q[0]);
    CHECK(lifted[3] == q[1]);
}

TEST_CASE("lifted slow flow tracks the full flow on an attracting sheet to O(eps)") {
    models::ReciprocalInhibitionParams p;
    p.epsilon = 1e-3;
    const auto sys = models::ri_system(p);
    const Eigen::Vector2d v0(1.0, 1.0);
    const auto d = strong_directions(sys, models::ri_lift(v0, p));
    REQUIRE(d.u == 0);
    const ivp::Rhs reduced = [&](double, const Vector& z) -> Vector { return models::ri_slow_flow(z.head<2>(), p); };
    const double span = 0.05;
    const auto slow = ivp::integrate(reduced, Vector(v0), 0.0, span);
    const auto full = ivp::integrate(sys, models::ri_lift(v0, p), span);
    double worst = 0.0;
    for (double t = 0.01; t <= span + 1e-12; t += 0.01) {
        const Vector lifted = models::ri_lift(slow.at(t).head<2>(), p);
        worst = std::max(worst, (full.at(t) - lifted).norm());
    }
    CHECK(worst <= 10 * p.epsilon);
}
