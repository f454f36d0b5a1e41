#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smst/core.hpp"
#include "smst/models/fhn.hpp"
#include "smst/models/linear.hpp"
#include "smst/models/morris_lecar.hpp"
#include "smst/models/reciprocal_inhibition.hpp"

using namespace smst;

namespace {

struct ModelCase {
    const char* name;
    SlowFastSystem system;
    std::vector<double> lo;
    std::vector<double> hi;
};

std::vector<ModelCase> model_cases() {
    return {
        {"linear", models::linear_system({0.1}), {-2, -2, -2}, {2, 2, 2}},
        {"morris_lecar", models::ml_system({-0.22, 0.002}), {-0.4, 0.0, 0.0}, {0.3, 1.0, 0.2}},
        {"fhn", models::fhn_system({0.0, 1.2463, 1e-3}), {-0.5, -0.3, -0.2}, {1.2, 0.3, 0.2}},
        {"reciprocal_inhibition", models::ri_system({}), {-1, -1, -1, -1}, {1, 1, 1, 1}},
    };
}

double max_abs(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

TEST_CASE("assemble_field on the linear system") {
    const auto sys = models::linear_system({0.1});
    CHECK(max_abs(assemble_field(sys, Vector::Zero(3)) - Vector{{0, 0, 1}}) == 0.0);
    const auto sys_half = models::linear_system({0.5});
    CHECK(max_abs(assemble_field(sys_half, Vector{{1, 2, 3}}) - Vector{{4, 4, 1}}) < 1e-15);
}

TEST_CASE("assemble_field vanishes at the FHN equilibrium for p = 0") {
    const auto sys = models::fhn_system({0.0, 1.2463, 1e-3});
    CHECK(max_abs(assemble_field(sys, Vector::Zero(3))) == 0.0);
}

TEST_CASE("assemble_field scaled by eps reproduces the fast field on every model") {
    oracle::Sampler rng(11);
    for (const auto& mc : model_cases()) {
        CAPTURE(mc.name);
        const auto& sys = mc.system;
        for (int i = 0; i < 50; ++i) {
            const Vector z = rng.in_box(mc.lo, mc.hi);
            const Vector big_f = assemble_field(sys, z);
            const Vector x = sys.fast_part(z), y = sys.slow_part(z);
            const Vector f = sys.fast(x, y, sys.epsilon());
            const Vector g = sys.slow(x, y, sys.epsilon());
            const double fs = std::max(1.0, max_abs(f));
            CHECK(max_abs(sys.epsilon() * big_f.head(sys.fast_dim()) - f) <= 1e-14 * fs);
            CHECK(max_abs(big_f.tail(sys.slow_dim()) - g) <= 1e-14 * std::max(1.0, max_abs(g)));
        }
    }
}

TEST_CASE("analytic Jacobians match central differences on every model") {
    oracle::Sampler rng(7);
    for (const auto& mc : model_cases()) {
        CAPTURE(mc.name);
        const auto& sys = mc.system;
        REQUIRE(sys.has_fast_jacobian());
        REQUIRE(sys.has_full_jacobian());
        for (int i = 0; i < 100; ++i) {
            const Vector z = rng.in_box(mc.lo, mc.hi);
            const Vector y = sys.slow_part(z);
            const double eps = sys.epsilon();
            const auto fast_of_x = [&](const Vector& x) { return sys.fast(x, y, eps); };
            const auto fg = [&](const Vector& w) {
                Vector out(sys.dim());
                out << sys.fast(sys.fast_part(w), sys.slow_part(w), eps), sys.slow(sys.fast_part(w), sys.slow_part(w), eps);
                return out;
            };
            CHECK(oracle::rel_diff(sys.fast_jacobian(sys.fast_part(z), y, eps),
                                   oracle::central_jacobian(fast_of_x, sys.fast_part(z))) <= 1e-5);
            CHECK(oracle::rel_diff(sys.unscaled_jacobian(z), oracle::central_jacobian(fg, z)) <= 1e-5);
            CHECK(oracle::rel_diff(assemble_jacobian(sys, z), oracle::central_jacobian(
                                                                  [&](const Vector& w) { return assemble_field(sys, w); },
                                                                  z)) <= 1e-5);
        }
    }
}

TEST_CASE("system construction guards") {
    SlowFastSystem::Definition def;
    def.name = "bad";
    def.m = 1;
    def.n = 1;
    def.epsilon = 0.0;
    def.fast_field = [](const Vector& x, const Vector&, double) { return x; };
    def.slow_field = [](const Vector&, const Vector& y, double) { return y; };
    CHECK_THROWS_AS(SlowFastSystem{def}, Error);
    def.epsilon = 0.1;
    def.n = 0;
    CHECK_THROWS_AS(SlowFastSystem{def}, Error);
}

TEST_CASE("non-finite field values are model-evaluation errors carrying the state") {
    SlowFastSystem::Definition def;
    def.name = "log";
    def.m = 1;
    def.n = 1;
    def.epsilon = 0.1;
    def.fast_field = [](const Vector& x, const Vector&, double) { return Vector{{std::log(x[0])}}; };
    def.slow_field = [](const Vector&, const Vector&, double) { return Vector{{1.0}}; };
    const SlowFastSystem sys(def);
    try {
        (void)assemble_field(sys, Vector{{-1.0, 0.0}});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::model_evaluation);
        REQUIRE(e.state().has_value());
        CHECK((*e.state())[0] == -1.0);
    }
}

TEST_CASE("mesh invariants") {
    CHECK_THROWS_AS(Mesh({0.0}), Error);
    CHECK_THROWS_AS(Mesh({0.0, 1.0, 1.0}), Error);
    CHECK_THROWS_AS(Mesh::uniform(0.0, 1.0, 0), Error);
    const auto mesh = Mesh::uniform(1.0, 3.0, 4);
    CHECK(mesh.intervals() == 4);
    CHECK(mesh.step(2) == doctest::Approx(0.5));
    CHECK(mesh.back() == 3.0);
}

TEST_CASE("trajectory segments round trip through the flat layout") {
    const auto mesh = Mesh::uniform(0.0, 1.0, 3);
    std::vector<Vector> zs;
    for (int j = 0; j < 4; ++j) zs.push_back(Vector{{double(j), 10.0 + j, 20.0 + j}});
    const TrajectorySegment seg(mesh, zs);
    const Vector flat = seg.flatten();
    CHECK(flat.size() == 12);
    CHECK(flat[3] == 1.0);
    CHECK(flat[5] == 21.0);
    const auto back = TrajectorySegment::unflatten(mesh, flat, 3);
    for (int j = 0; j < 4; ++j) CHECK(max_abs(back.z(j) - zs[static_cast<size_t>(j)]) == 0.0);
    zs.pop_back();
    CHECK_THROWS_AS(TrajectorySegment(mesh, zs), Error);
    zs.push_back(Vector{{NAN, 0.0, 0.0}});
    CHECK_THROWS_AS(TrajectorySegment(mesh, zs), Error);
}

TEST_CASE("boundary manifolds") {
    Matrix a(2, 3);
    a << 1, 0, 0, 0, 0, 1;
    const BoundaryManifold b(a, Vector{{1, 2, 3}});
    CHECK(b.codim() == 2);
    CHECK(b.dim() == 1);
    CHECK(max_abs(b.residual(Vector{{2, 7, 5}}) - Vector{{1, 2}}) == 0.0);
    Matrix rank_deficient(2, 3);
    rank_deficient << 1, 0, 0, 2, 0, 0;
    CHECK_THROWS_AS(BoundaryManifold(rank_deficient, Vector::Zero(3)), Error);
    CHECK_THROWS_AS(BoundaryManifold(Matrix::Identity(4, 3), Vector::Zero(3)), Error);
}

TEST_CASE("strong directions of the linear system") {
    const auto sys = models::linear_system({0.1});
    const auto d = strong_directions(sys, Vector{{0.3, 0.0, 0.3}});
    REQUIRE(d.u == 1);
    REQUIRE(d.stable_values.size() == 1);
    CHECK(d.stable_values[0].real() == doctest::Approx(-1.0));
    CHECK(d.unstable_values[0].real() == doctest::Approx(1.0));
    CHECK(max_abs(d.stable_vectors[0] - Vector{{1, 0, 0}}) < 1e-15);
    CHECK(max_abs(d.unstable_vectors[0] - Vector{{0, 1, 0}}) < 1e-15);
}

namespace {

/// Residual of each stored direction against D_x f: real vectors must be
/// eigenvectors, complex-pair bases must span an invariant plane.
double eigen_residual(const SlowFastSystem& sys, const Vector& z, const StrongDirections& d) {
    const int m = sys.fast_dim();
    const Matrix jac = sys.fast_jacobian(sys.fast_part(z), sys.slow_part(z), sys.epsilon());
    double worst = 0.0;
    auto check = [&](const std::vector<std::complex<double>>& values, const std::vector<Vector>& vecs) {
        for (size_t i = 0; i < vecs.size(); ++i) {
            const Vector v = vecs[i].head(m);
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(vecs[i].tail(sys.slow_dim()).norm() == 0.0);
            double r;
            if (values[i].imag() == 0.0) {
                r = (jac * v - values[i].real() * v).norm();
            } else {
                const size_t partner = values[i].imag() > 0 ? i + 1 : i - 1;
                Matrix plane(m, 2);
                plane << v, vecs[partner].head(m);
                const Vector jv = jac * v;
                const Vector coeff = plane.colPivHouseholderQr().solve(jv);
                r = (plane * coeff - jv).norm();
            }
            worst = std::max(worst, r / jac.norm());
        }
    };
    check(d.stable_values, d.stable_vectors);
    check(d.unstable_values, d.unstable_vectors);
    return worst;
}

}  // namespace

TEST_CASE("Morris-Lecar reference point is a saddle with accurate eigenpairs") {
    const auto sys = models::ml_system({-0.22, 0.002});
    const Vector z{{-0.109854033586602, 0.052299738361417, 0.025187193494031}};
    const auto d = strong_directions(sys, z);
    CHECK(d.u == 1);
    CHECK(d.stable_values.size() == 1);
    CHECK(eigen_residual(sys, z, d) <= 1e-8);
    CHECK(d.min_abs_real() > kHyperbolicityTolerance);
}

TEST_CASE("FHN middle branch is fully unstable with a complex pair") {
    const auto sys = models::fhn_system({0.0, 1.2463, 1e-3});
    const Vector z = models::fhn_critical(0.3, 0.0);
    const auto d = strong_directions(sys, z);
    CHECK(d.u == 2);
    CHECK(d.stable_values.empty());
    CHECK(d.unstable_values[0].imag() != 0.0);
    CHECK(eigen_residual(sys, z, d) <= 1e-8);
}

TEST_CASE("eigenpair residuals hold across sampled saddle points") {
    const auto ml = models::ml_system({-0.22, 0.002});
    for (double v = -0.2; v <= -0.05; v += 0.01) {
        const Vector z = models::ml_critical_curve(v);
        CHECK(eigen_residual(ml, z, strong_directions(ml, z)) <= 1e-8);
    }
    const auto ri = models::ri_system({});
    const Vector z = models::ri_lift({-0.16851015831, 0.85854544475}, {});
    const auto d = strong_directions(ri, z);
    CHECK(eigen_residual(ri, z, d) <= 1e-8);
    CHECK(d.stable_values.size() + d.unstable_values.size() == 2);
}

TEST_CASE("eigenvector signs follow the first-nonzero-positive convention") {
    const auto sys = models::ml_system({-0.22, 0.002});
    const auto d = strong_directions(sys, models::ml_critical_curve(-0.11));
    for (const auto* vs : {&d.stable_vectors, &d.unstable_vectors})
        for (const auto& v : *vs) {
            int first = 0;
            while (std::abs(v[first]) <= 1e-12) ++first;
            CHECK(v[first] > 0.0);
        }
}

TEST_CASE("strong directions are invariant under positive rescaling of the fast field") {
    const auto base = models::ml_system({-0.22, 0.002});
    const double c = 3.7;
    SlowFastSystem::Definition def;
    def.name = "scaled";
    def.m = 2;
    def.n = 1;
    def.epsilon = 0.002;
    def.fast_field = [&](const Vector& x, const Vector& y, double e) { return Vector(c * base.fast(x, y, e)); };
    def.slow_field = [&](const Vector& x, const Vector& y, double e) { return base.slow(x, y, e); };
    def.fast_jacobian = [&](const Vector& x, const Vector& y, double e) {
        return Matrix(c * base.fast_jacobian(x, y, e));
    };
    const SlowFastSystem scaled(def);
    const Vector z = models::ml_critical_curve(-0.12);
    const auto d0 = strong_directions(base, z);
    const auto d1 = strong_directions(scaled, z);
    REQUIRE(d0.u == d1.u);
    CHECK(std::abs(d1.unstable_values[0].real() - c * d0.unstable_values[0].real()) <=
          1e-10 * std::abs(c * d0.unstable_values[0].real()));
    CHECK(std::abs(d1.stable_values[0].real() - c * d0.stable_values[0].real()) <=
          1e-10 * std::abs(c * d0.stable_values[0].real()));
    CHECK(max_abs(d1.unstable_vectors[0] - d0.unstable_vectors[0]) <= 1e-10);
    CHECK(max_abs(d1.stable_vectors[0] - d0.stable_vectors[0]) <= 1e-10);
}

TEST_CASE("strong directions report loss of normal hyperbolicity at a fold") {
    const auto sys = models::ml_system({-0.22, 0.002});
    const auto folds = models::ml_folds();
    REQUIRE(!folds.empty());
    try {
        (void)strong_directions(sys, models::ml_critical_curve(folds.front()));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::normal_hyperbolicity_lost);
    }
}

TEST_CASE("critical_point examples") {
    const auto lin = models::linear_system({0.1});
    const Vector x = critical_point(lin, Vector{{2.0}}, Vector{{0.0, 1.0}});
    CHECK(max_abs(x - Vector{{2.0, 0.0}}) < 1e-12);

    // -0.5^3 + 1.1 * 0.5^2 - 0.1 * 0.5 = 0.1
    const auto fhn = models::fhn_system({0.0, 1.2463, 1e-3});
    const Vector xf = critical_point(fhn, Vector{{0.1}}, Vector{{0.48, 0.01}});
    CHECK(xf[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(xf[1]) < 1e-12);
}

TEST_CASE("critical_point agrees with the explicit reciprocal-inhibition graph") {
    const models::ReciprocalInhibitionParams p;
    const auto sys = models::ri_system(p);
    auto syn = [&](double x) { return 1.0 / (1.0 + std::exp(-4.0 * p.gamma * (x - p.theta))); };
    auto h = [&](double v1, double v2) {
        return Vector{{p.a * std::tanh(p.sigma1 * v1 / p.a) - v1 - p.omega * syn(v2) * (v1 - p.r),
                       p.a * std::tanh(p.sigma2 * v2 / p.a) - v2 - p.omega * syn(v1) * (v2 - p.r)}};
    };
    const Vector v{{-0.16851015831, 0.85854544475}};
    const Vector q = h(v[0], v[1]);
    const Vector x = critical_point(sys, q, v + Vector{{1e-3, -1e-3}});
    CHECK(max_abs(x - v) < 1e-10);
    CHECK(max_abs(sys.fast(x, q, 0.0)) <= 1e-12);
    CHECK(max_abs(Vector(models::ri_h({v[0], v[1]}, p)) - q) <= 1e-14);
}

TEST_CASE("critical_point residual stays below 1e-12 across sampled chart points") {
    oracle::Sampler rng(3);
    const auto ml = models::ml_system({-0.22, 0.002});
    const auto fhn = models::fhn_system({0.0, 1.2463, 1e-3});
    const auto ri = models::ri_system({});
    const auto [lo_fold, hi_fold] = models::fhn_folds();
    int inf_norm_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-0.2, -0.05);
        const Vector zm = models::ml_critical_curve(v);
        const Vector xm = critical_point(ml, zm.tail(1), zm.head(2) + Vector{{2e-3, -1e-3}});
        if (max_abs(ml.fast(xm, zm.tail(1), 0.0)) > 1e-12 || std::abs(xm[0] - v) > 1e-8) ++inf_norm_failures;

        const double x1 = rng.uniform(hi_fold + 0.05, 1.0);
        const Vector zf = models::fhn_critical(x1, 0.0);
        const Vector xf = critical_point(fhn, zf.tail(1), zf.head(2) + Vector{{1e-3, 1e-3}});
        if (max_abs(fhn.fast(xf, zf.tail(1), 0.0)) > 1e-12 || std::abs(xf[0] - x1) > 1e-8) ++inf_norm_failures;

        const Eigen::Vector2d vr(rng.uniform(-0.3, -0.1), rng.uniform(0.6, 0.9));
        const Vector zr = models::ri_lift(vr, {});
        const Vector xr = critical_point(ri, zr.tail(2), zr.head(2) + Vector{{1e-3, 1e-3}});
        if (max_abs(ri.fast(xr, zr.tail(2), 0.0)) > 1e-12) ++inf_norm_failures;
    }
    CHECK(inf_norm_failures == 0);
}

TEST_CASE("slow flow of the linear system is identically one") {
    for (double eps : {0.5, 0.1, 1e-3}) {
        const auto sys = models::linear_system({eps});
        for (double y : {-3.0, 0.0, 0.7, 12.0}) {
            const auto sf = slow_flow_field(sys, Vector{{y}}, Vector{{0.0, 0.0}});
            CHECK(sf.ydot[0] == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(sf.x[0] == doctest::Approx(y).epsilon(1e-12));
        }
    }
}

TEST_CASE("slow flow at a fold is a fold-singularity error") {
    const auto sys = models::fhn_system({0.0, 1.2463, 1e-3});
    const auto [x_minus, x_plus] = models::fhn_folds();
    (void)x_minus;
    const Vector z = models::fhn_critical(x_plus, 0.0);
    // Start Newton exactly on the fold point so the singular Jacobian is met.
    CHECK_THROWS_AS((void)slow_flow_field(sys, z.tail(1), z.head(2)), Error);
}
