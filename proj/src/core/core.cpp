#include "smst/core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace smst {

double fd_step(const Vector& z) noexcept {
    const double scale = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
    return std::max(1e-7, 1e-7 * scale);
}

SlowFastSystem::SlowFastSystem(Definition def) : def_(std::move(def)) {
    require(def_.m >= 1, "fast dimension must be >= 1");
    require(def_.n >= 1, "slow dimension must be >= 1");
    require(def_.epsilon > 0.0 && std::isfinite(def_.epsilon), "epsilon must be finite and > 0");
    require(static_cast<bool>(def_.fast_field) && static_cast<bool>(def_.slow_field),
            "fast and slow fields are required");
}

double SlowFastSystem::param(const std::string& key) const {
    auto it = def_.params.find(key);
    if (it == def_.params.end()) fail(ErrorKind::configuration, "system '" + def_.name + "' has no parameter " + key);
    return it->second;
}

Vector SlowFastSystem::fast(const Vector& x, const Vector& y, double eps) const { return def_.fast_field(x, y, eps); }

Vector SlowFastSystem::slow(const Vector& x, const Vector& y, double eps) const { return def_.slow_field(x, y, eps); }

Vector SlowFastSystem::join(const Vector& x, const Vector& y) const {
    Vector z(dim());
    z << x, y;
    return z;
}

Matrix SlowFastSystem::fast_jacobian(const Vector& x, const Vector& y, double eps) const {
    if (def_.fast_jacobian) return def_.fast_jacobian(x, y, eps);
    if (def_.full_jacobian) return def_.full_jacobian(x, y, eps).topLeftCorner(def_.m, def_.m);
    const double h = fd_step(join(x, y));
    Matrix j(def_.m, def_.m);
    Vector xp = x, xm = x;
    for (int c = 0; c < def_.m; ++c) {
        xp[c] = x[c] + h;
        xm[c] = x[c] - h;
        j.col(c) = (fast(xp, y, eps) - fast(xm, y, eps)) / (2.0 * h);
        xp[c] = xm[c] = x[c];
    }
    return j;
}

Matrix SlowFastSystem::unscaled_jacobian(const Vector& z, double eps) const {
    if (def_.full_jacobian) return def_.full_jacobian(fast_part(z), slow_part(z), eps);
    return unscaled_jacobian_fd(z, eps);
}

Matrix SlowFastSystem::unscaled_jacobian_fd(const Vector& z, double eps) const {
    const int d = dim();
    const double h = fd_step(z);
    Matrix j(d, d);
    Vector zp = z, zm = z;
    for (int c = 0; c < d; ++c) {
        zp[c] = z[c] + h;
        zm[c] = z[c] - h;
        Vector fp(d), fm(d);
        fp << fast(fast_part(zp), slow_part(zp), eps), slow(fast_part(zp), slow_part(zp), eps);
        fm << fast(fast_part(zm), slow_part(zm), eps), slow(fast_part(zm), slow_part(zm), eps);
        j.col(c) = (fp - fm) / (2.0 * h);
        zp[c] = zm[c] = z[c];
    }
    return j;
}

SlowFastSystem SlowFastSystem::with_epsilon(double eps) const {
    Definition def = def_;
    def.epsilon = eps;
    if (def.params.count("epsilon")) def.params["epsilon"] = eps;
    return SlowFastSystem(std::move(def));
}

Vector assemble_field(const SlowFastSystem& system, const Vector& z) {
    const Vector x = system.fast_part(z);
    const Vector y = system.slow_part(z);
    const double eps = system.epsilon();
    Vector out(system.dim());
    out << system.fast(x, y, eps) / eps, system.slow(x, y, eps);
    if (!out.allFinite()) fail(ErrorKind::model_evaluation, "non-finite field value in " + system.name(), z);
    return out;
}

Matrix assemble_jacobian(const SlowFastSystem& system, const Vector& z) {
    Matrix j = system.unscaled_jacobian(z);
    j.topRows(system.fast_dim()) /= system.epsilon();
    return j;
}

Matrix assemble_jacobian_fd(const SlowFastSystem& system, const Vector& z) {
    Matrix j = system.unscaled_jacobian_fd(z, system.epsilon());
    j.topRows(system.fast_dim()) /= system.epsilon();
    return j;
}

// ---------------------------------------------------------------------------

Mesh::Mesh(std::vector<double> times) : times_(std::move(times)) {
    require(times_.size() >= 2, "mesh needs at least one interval");
    for (size_t j = 0; j < times_.size(); ++j) {
        require(std::isfinite(times_[j]), "mesh times must be finite");
        if (j) require(times_[j] > times_[j - 1], "mesh times must be strictly increasing");
    }
}

Mesh Mesh::uniform(double a, double b, int intervals) {
    require(intervals >= 1, "uniform mesh needs N >= 1");
    require(b > a, "uniform mesh needs b > a");
    std::vector<double> t(static_cast<size_t>(intervals) + 1);
    for (int j = 0; j <= intervals; ++j) t[static_cast<size_t>(j)] = a + (b - a) * j / intervals;
    t.back() = b;
    return Mesh(std::move(t));
}

TrajectorySegment::TrajectorySegment(Mesh mesh_, std::vector<Vector> states_)
    : mesh(std::move(mesh_)), states(std::move(states_)) {
    require(static_cast<int>(states.size()) == mesh.points(), "state count must equal mesh point count");
    const auto d = states.front().size();
    for (const auto& z : states) {
        require(z.size() == d && d > 0, "all states must share one positive dimension");
        require(z.allFinite(), "trajectory states must be finite");
    }
}

Vector TrajectorySegment::flatten() const {
    const int d = dim();
    Vector flat(static_cast<Eigen::Index>(points()) * d);
    for (int j = 0; j < points(); ++j) flat.segment(static_cast<Eigen::Index>(j) * d, d) = z(j);
    return flat;
}

TrajectorySegment TrajectorySegment::unflatten(const Mesh& mesh, const Vector& flat, int dim) {
    require(flat.size() == static_cast<Eigen::Index>(mesh.points()) * dim, "flat vector size mismatch");
    std::vector<Vector> states;
    states.reserve(static_cast<size_t>(mesh.points()));
    for (int j = 0; j < mesh.points(); ++j) states.emplace_back(flat.segment(static_cast<Eigen::Index>(j) * dim, dim));
    return TrajectorySegment(mesh, std::move(states));
}

BoundaryManifold::BoundaryManifold(Matrix constraint, Vector base_point)
    : constraint_(std::move(constraint)), base_(std::move(base_point)) {
    require(constraint_.cols() == base_.size(), "constraint width must match base point dimension");
    require(constraint_.rows() >= 1 && constraint_.rows() <= constraint_.cols(), "codimension must be in [1, m+n]");
    require(constraint_.allFinite() && base_.allFinite(), "boundary manifold data must be finite");
    Eigen::FullPivLU<Matrix> lu(constraint_);
    require(lu.rank() == constraint_.rows(), "boundary constraint matrix must have full row rank");
}

// ---------------------------------------------------------------------------

namespace {

void normalize_sign(Vector& v) {
    v.normalize();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

Vector embed(const Vector& fast, int dim) {
    Vector out = Vector::Zero(dim);
    out.head(fast.size()) = fast;
    return out;
}

Matrix basis_of(const std::vector<Vector>& vectors, int m) {
    Matrix b(m, static_cast<Eigen::Index>(vectors.size()));
    for (size_t i = 0; i < vectors.size(); ++i) b.col(static_cast<Eigen::Index>(i)) = vectors[i].head(m);
    return b;
}

}  // namespace

Matrix StrongDirections::stable_basis() const { return basis_of(stable_vectors, m); }
Matrix StrongDirections::unstable_basis() const { return basis_of(unstable_vectors, m); }

Matrix StrongDirections::coordinate_map() const {
    Matrix b(m, m);
    b << stable_basis(), unstable_basis();
    Eigen::FullPivLU<Matrix> lu(b);
    if (!lu.isInvertible()) fail(ErrorKind::singular_matrix, "fast eigenbasis is degenerate");
    return lu.inverse();
}

double StrongDirections::min_abs_real() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : stable_values) best = std::min(best, std::abs(l.real()));
    for (const auto& l : unstable_values) best = std::min(best, std::abs(l.real()));
    return best;
}

StrongDirections strong_directions(const SlowFastSystem& system, const Vector& z, double hyperbolicity_tolerance) {
    const int m = system.fast_dim();
    const Vector x = system.fast_part(z);
    const Vector y = system.slow_part(z);
    const Matrix jac = system.fast_jacobian(x, y, system.epsilon());
    if (!jac.allFinite()) fail(ErrorKind::model_evaluation, "non-finite fast Jacobian", z);

    Eigen::EigenSolver<Matrix> es(jac, true);
    if (es.info() != Eigen::Success) fail(ErrorKind::singular_matrix, "eigen-decomposition failed", z);
    const auto values = es.eigenvalues();
    const auto vectors = es.eigenvectors();

    struct Item {
        std::complex<double> value;
        Vector vec;
    };
    std::vector<Item> stable, unstable;
    const double scale = std::max(1.0, jac.cwiseAbs().maxCoeff());
    for (int i = 0; i < m; ++i) {
        const std::complex<double> lambda = values[i];
        if (std::abs(lambda.real()) <= hyperbolicity_tolerance) {
            fail(ErrorKind::normal_hyperbolicity_lost,
                 "fast eigenvalue " + std::to_string(lambda.real()) + (lambda.imag() >= 0 ? "+" : "") +
                     std::to_string(lambda.imag()) + "i has near-zero real part",
                 z);
        }
        auto& bucket = lambda.real() < 0 ? stable : unstable;
        if (std::abs(lambda.imag()) <= 1e-14 * scale) {
            Vector v = vectors.col(i).real();
            normalize_sign(v);
            bucket.push_back({{lambda.real(), 0.0}, v});
        } else if (lambda.imag() > 0) {
            Vector re = vectors.col(i).real();
            Vector im = vectors.col(i).imag();
            normalize_sign(re);
            normalize_sign(im);
            bucket.push_back({lambda, re});
            bucket.push_back({std::conj(lambda), im});
        }
    }
    // Strongest first: most negative stable, most positive unstable. Stable sort
    // here keeps complex pairs adjacent.
    std::stable_sort(stable.begin(), stable.end(),
                     [](const Item& a, const Item& b) { return a.value.real() < b.value.real(); });
    std::stable_sort(unstable.begin(), unstable.end(),
                     [](const Item& a, const Item& b) { return a.value.real() > b.value.real(); });

    StrongDirections out;
    out.m = m;
    for (auto& it : stable) {
        out.stable_values.push_back(it.value);
        out.stable_vectors.push_back(embed(it.vec, system.dim()));
    }
    for (auto& it : unstable) {
        out.unstable_values.push_back(it.value);
        out.unstable_vectors.push_back(embed(it.vec, system.dim()));
    }
    out.u = static_cast<int>(out.unstable_vectors.size());
    return out;
}

Vector critical_point(const SlowFastSystem& system, const Vector& y, const Vector& x_guess,
                      const CriticalPointOptions& opts) {
    require(x_guess.size() == system.fast_dim() && y.size() == system.slow_dim(), "critical_point: dimension mismatch");
    Vector x = x_guess;
    for (int it = 0; it <= opts.max_iterations; ++it) {
        const Vector r = system.fast(x, y, 0.0);
        if (!r.allFinite()) fail(ErrorKind::model_evaluation, "non-finite fast field", system.join(x, y));
        if (r.lpNorm<Eigen::Infinity>() <= opts.tolerance) return x;
        if (it == opts.max_iterations) break;
        const Matrix j = system.fast_jacobian(x, y, 0.0);
        Eigen::FullPivLU<Matrix> lu(j);
        if (!lu.isInvertible()) fail(ErrorKind::singular_matrix, "D_x f is singular", system.join(x, y), it);
        const Vector dx = lu.solve(-r);
        x += dx;
        // Converged to round-off: accept when the Newton correction is negligible.
        if (dx.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
            const Vector r2 = system.fast(x, y, 0.0);
            if (r2.lpNorm<Eigen::Infinity>() <= opts.tolerance) return x;
        }
    }
    fail(ErrorKind::newton_failure, "critical_point did not converge", system.join(x, y));
}

SlowFlowPoint slow_flow_field(const SlowFastSystem& system, const Vector& y, const Vector& x_guess) {
    const int m = system.fast_dim();
    const int n = system.slow_dim();
    SlowFlowPoint out;
    out.x = critical_point(system, y, x_guess);
    const Vector z = system.join(out.x, y);
    const Matrix j = system.unscaled_jacobian(z, 0.0);
    const Matrix fx = j.topLeftCorner(m, m);
    const Matrix fy = j.topRightCorner(m, n);
    Eigen::FullPivLU<Matrix> lu(fx);
    if (!lu.isInvertible()) fail(ErrorKind::fold_singularity, "D_x f singular: fold point", z);
    out.dh = -lu.solve(fy);
    out.ydot = system.slow(out.x, y, 0.0);
    return out;
}

}  // namespace smst
