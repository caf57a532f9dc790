#pragma once

// Exterior Helmholtz scattering by the method of fundamental solutions:
// radiating point-source kernels placed on an interior dilated copy of the
// surface, fitted to the boundary condition in the least-squares sense with
// a truncated-SVD solve.  Far fields follow the e^{ikr}/r convention.

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <lapacke.h>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "obscat/geometry.hpp"
#include "obscat/mie.hpp" // BoundaryCondition

namespace obscat {

struct WaveContext {
    double k;
    explicit WaveContext(double k_) : k(k_) {
        if (!(k > 0.0)) throw std::invalid_argument("WaveContext: k must be positive");
    }
};

struct PlaneWave {
    Direction alpha;
};
struct PointSource {
    Vec3 y;
};
/// No incident field; the fitted kernel sum is the whole field (used for
/// pure boundary-data problems, e.g. the double-layer cross-check).
struct NoIncident {};

using Excitation = std::variant<NoIncident, PlaneWave, PointSource>;

struct SolveOptions {
    double tol = 1e-6;        // boundary residual tolerance on the check grid
    double dilation = 0.5;    // interior source surface scale, in (0.3, 0.9)
    int src_n_theta = 0;      // 0 = choose from ka
    double svd_rcond = 1e-12;
    double resolution_scale = 1.0; // one-knob multiplier on grid sizes
};

class SolveError : public std::runtime_error {
public:
    double boundary_residual = 0.0;
    double condition_estimate = 0.0;
    SolveError(const std::string& msg, double res, double cond)
        : std::runtime_error(msg), boundary_residual(res), condition_estimate(cond) {}
};

struct ScatterSolution {
    StarShape shape;
    std::vector<Vec3> sources;
    Eigen::VectorXcd coeffs;
    Excitation excitation;
    BoundaryCondition bc;
    double k = 0.0;
    double boundary_residual = 0.0;
    double condition_estimate = 0.0;
};

namespace detail {

inline Complex fundamental(double k, const Vec3& x, const Vec3& y) {
    const double rho = (x - y).norm();
    return std::exp(Complex(0.0, k * rho)) / (4.0 * kPi * rho);
}

inline Eigen::Vector3cd fundamental_grad(double k, const Vec3& x, const Vec3& y) {
    const Vec3 d = x - y;
    const double rho = d.norm();
    const Complex g = std::exp(Complex(0.0, k * rho)) / (4.0 * kPi * rho);
    const Complex fac = g * (Complex(0.0, k) - 1.0 / rho) / rho;
    return fac * d.cast<Complex>();
}

inline Complex incident_field(const Excitation& exc, double k, const Vec3& x) {
    if (const auto* pw = std::get_if<PlaneWave>(&exc))
        return std::exp(Complex(0.0, k * pw->alpha.v.dot(x)));
    if (const auto* ps = std::get_if<PointSource>(&exc)) return fundamental(k, x, ps->y);
    return {0.0, 0.0};
}

inline Eigen::Vector3cd incident_grad(const Excitation& exc, double k, const Vec3& x) {
    if (const auto* pw = std::get_if<PlaneWave>(&exc)) {
        const Complex u = std::exp(Complex(0.0, k * pw->alpha.v.dot(x)));
        return (Complex(0.0, k) * u) * pw->alpha.v.cast<Complex>();
    }
    if (const auto* ps = std::get_if<PointSource>(&exc)) return fundamental_grad(k, x, ps->y);
    return Eigen::Vector3cd::Zero();
}

/// Minimum-norm least squares by divide-and-conquer SVD (zgelsd), relative
/// cutoff rcond.  Returns solution and fills cond with s_max / s_min(kept).
inline Eigen::VectorXcd lstsq_svd(Eigen::MatrixXcd A, Eigen::VectorXcd b, double rcond,
                                  double& cond) {
    const lapack_int m = static_cast<lapack_int>(A.rows());
    const lapack_int n = static_cast<lapack_int>(A.cols());
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(std::max(m, n));
    rhs.head(m) = b;
    std::vector<double> s(std::min(m, n));
    lapack_int rank = 0;
    const lapack_int info =
        LAPACKE_zgelsd(LAPACK_COL_MAJOR, m, n, 1, A.data(), m, rhs.data(), std::max(m, n),
                       s.data(), rcond, &rank);
    if (info != 0) throw std::runtime_error("lstsq_svd: zgelsd failed, info=" + std::to_string(info));
    cond = (rank > 0 && s[rank - 1] > 0.0) ? s[0] / s[rank - 1] : std::numeric_limits<double>::infinity();
    return rhs.head(n);
}

/// One boundary-operator row: Gamma_j applied to a field with value u and
/// gradient grad at a surface node with outward normal nrm.
inline Complex apply_bc(const BoundaryCondition& bc, const Complex& u,
                        const Eigen::Vector3cd& grad, const Vec3& nrm) {
    switch (bc.tag) {
        case BoundaryCondition::Tag::Dirichlet:
            return u;
        case BoundaryCondition::Tag::Neumann:
            return nrm.cast<Complex>().dot(grad);
        case BoundaryCondition::Tag::Impedance:
            return nrm.cast<Complex>().dot(grad) + bc.h * u;
    }
    return {};
}

inline StarShape dilated(const StarShape& s, double factor) {
    StarShape d = s;
    d.coeffs *= factor;
    return d;
}

inline int auto_src_n_theta(double ka, int shape_lmax, double scale) {
    // higher angular bandwidth of the boundary needs denser kernels
    const int base = static_cast<int>(std::ceil(1.5 * ka)) + 12 + 4 * shape_lmax;
    return std::clamp(static_cast<int>(std::lround(base * scale)), 8, 40);
}

} // namespace detail

/// Places MFS sources, collocates the boundary condition at ~2x oversampled
/// surface nodes, solves by truncated SVD, and verifies the residual on an
/// independent offset check grid.
inline ScatterSolution solve(const StarShape& shape, const BoundaryCondition& bc,
                             const Excitation& exc, const WaveContext& wave,
                             const SolveOptions& opts = {}) {
    const double rmax = max_radius(shape);
    const double ka = wave.k * rmax;
    if (ka * 2.0 > 40.0)
        throw std::invalid_argument("solve: k * diameter exceeds the supported cap of 40");
    if (!(opts.dilation >= 0.3 && opts.dilation <= 0.9))
        throw std::invalid_argument("solve: dilation outside [0.3, 0.9]");

    if (const auto* ps = std::get_if<PointSource>(&exc)) {
        const Vec3 d = ps->y - shape.center;
        const double rho = d.norm();
        const double theta = (rho > 0) ? std::acos(std::clamp(d.z() / rho, -1.0, 1.0)) : 0.0;
        const double phi = std::atan2(d.y(), d.x());
        if (rho < shape.radius(theta, phi) + 1e-6 * 2.0 * rmax)
            throw std::invalid_argument("solve: point source not strictly exterior");
    }

    const int mt = (opts.src_n_theta > 0)
                       ? opts.src_n_theta
                       : detail::auto_src_n_theta(ka, shape.lmax, opts.resolution_scale);
    const int mp = 2 * mt;
    const auto src_quad = build_quadrature(detail::dilated(shape, opts.dilation), mt, mp);
    const int nct = static_cast<int>(std::ceil(mt * std::sqrt(2.0)));
    const auto col_quad = build_quadrature(shape, nct, 2 * nct);

    const std::size_t M = src_quad.size();
    const std::size_t N = col_quad.size();
    Eigen::MatrixXcd A(N, M);
    Eigen::VectorXcd b(N);
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& s = col_quad.points[i];
        const Vec3& nrm = col_quad.normals[i];
        for (std::size_t j = 0; j < M; ++j) {
            const Vec3& y = src_quad.points[j];
            A(i, j) = detail::apply_bc(bc, detail::fundamental(wave.k, s, y),
                                       detail::fundamental_grad(wave.k, s, y), nrm);
        }
        b(i) = -detail::apply_bc(bc, detail::incident_field(exc, wave.k, s),
                                 detail::incident_grad(exc, wave.k, s), nrm);
    }

    ScatterSolution sol;
    sol.shape = shape;
    sol.sources = src_quad.points;
    sol.excitation = exc;
    sol.bc = bc;
    sol.k = wave.k;
    sol.coeffs = detail::lstsq_svd(std::move(A), std::move(b), opts.svd_rcond,
                                   sol.condition_estimate);

    // Independent check grid: different Gauss order and phi count.
    const auto chk = build_quadrature(shape, nct + 3, 2 * (nct + 3) + 2);
    double inc_max = 0.0, res_max = 0.0;
    std::vector<Complex> inc(chk.size());
    for (std::size_t i = 0; i < chk.size(); ++i) {
        inc[i] = detail::incident_field(exc, wave.k, chk.points[i]);
        inc_max = std::max(inc_max, std::abs(inc[i]));
    }
    for (std::size_t i = 0; i < chk.size(); ++i) {
        const Vec3& s = chk.points[i];
        Complex u = inc[i];
        Eigen::Vector3cd grad = detail::incident_grad(exc, wave.k, s);
        for (std::size_t j = 0; j < M; ++j) {
            u += sol.coeffs(j) * detail::fundamental(wave.k, s, sol.sources[j]);
            grad += sol.coeffs(j) * detail::fundamental_grad(wave.k, s, sol.sources[j]);
        }
        res_max = std::max(res_max, std::abs(detail::apply_bc(bc, u, grad, chk.normals[i])));
    }
    sol.boundary_residual = res_max / std::max(1.0, inc_max);
    if (sol.boundary_residual > opts.tol)
        throw SolveError("solve: boundary residual " + std::to_string(sol.boundary_residual) +
                             " above tolerance " + std::to_string(opts.tol) +
                             " (condition estimate " + std::to_string(sol.condition_estimate) + ")",
                         sol.boundary_residual, sol.condition_estimate);
    return sol;
}

/// Fits the kernel sum alone to Dirichlet data f(theta, phi) on S (no
/// incident field); the returned solution's field is the BVP solution.
inline ScatterSolution solve_dirichlet_data(const StarShape& shape, const WaveContext& wave,
                                            const std::function<Complex(double, double)>& f,
                                            const SolveOptions& opts = {}) {
    const double rmax = max_radius(shape);
    const int mt = (opts.src_n_theta > 0)
                       ? opts.src_n_theta
                       : detail::auto_src_n_theta(wave.k * rmax, shape.lmax, opts.resolution_scale);
    const auto src_quad = build_quadrature(detail::dilated(shape, opts.dilation), mt, 2 * mt);
    const int nct = static_cast<int>(std::ceil(mt * std::sqrt(2.0)));
    const auto col_quad = build_quadrature(shape, nct, 2 * nct);

    const std::size_t M = src_quad.size(), N = col_quad.size();
    Eigen::MatrixXcd A(N, M);
    Eigen::VectorXcd b(N);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < M; ++j)
            A(i, j) = detail::fundamental(wave.k, col_quad.points[i], src_quad.points[j]);
        b(i) = f(col_quad.thetas[i], col_quad.phis[i]);
    }

    ScatterSolution sol;
    sol.shape = shape;
    sol.sources = src_quad.points;
    sol.excitation = NoIncident{};
    sol.bc = BoundaryCondition::dirichlet();
    sol.k = wave.k;
    sol.coeffs = detail::lstsq_svd(std::move(A), std::move(b), opts.svd_rcond,
                                   sol.condition_estimate);

    const auto chk = build_quadrature(shape, nct + 3, 2 * (nct + 3) + 2);
    double fmax = 0.0, res = 0.0;
    for (std::size_t i = 0; i < chk.size(); ++i) {
        Complex u{0.0, 0.0};
        for (std::size_t j = 0; j < M; ++j)
            u += sol.coeffs(j) * detail::fundamental(wave.k, chk.points[i], sol.sources[j]);
        const Complex fv = f(chk.thetas[i], chk.phis[i]);
        fmax = std::max(fmax, std::abs(fv));
        res = std::max(res, std::abs(u - fv));
    }
    sol.boundary_residual = res / std::max(1.0, fmax);
    if (sol.boundary_residual > opts.tol)
        throw SolveError("solve_dirichlet_data: residual above tolerance",
                         sol.boundary_residual, sol.condition_estimate);
    return sol;
}

/// Total field u(x) = u_inc(x) + sum c_j g(x, y_j); x must not be interior.
inline Complex eval_field(const ScatterSolution& sol, const Vec3& x) {
    if (inside_shape(sol.shape, x))
        throw std::invalid_argument("eval_field: point inside the obstacle");
    Complex u = detail::incident_field(sol.excitation, sol.k, x);
    for (std::size_t j = 0; j < sol.sources.size(); ++j)
        u += sol.coeffs(j) * detail::fundamental(sol.k, x, sol.sources[j]);
    return u;
}

inline Eigen::Vector3cd eval_gradient(const ScatterSolution& sol, const Vec3& x) {
    if (inside_shape(sol.shape, x))
        throw std::invalid_argument("eval_gradient: point inside the obstacle");
    Eigen::Vector3cd g = detail::incident_grad(sol.excitation, sol.k, x);
    for (std::size_t j = 0; j < sol.sources.size(); ++j)
        g += sol.coeffs(j) * detail::fundamental_grad(sol.k, x, sol.sources[j]);
    return g;
}

struct BoundaryTrace {
    std::vector<Complex> u;
    std::vector<Complex> u_n;
};

/// u and u_N of sol's field sampled on an arbitrary quadrature whose nodes
/// lie outside (or on) sol's obstacle.
inline BoundaryTrace boundary_trace(const ScatterSolution& sol, const SurfaceQuadrature& quad) {
    BoundaryTrace tr;
    tr.u.reserve(quad.size());
    tr.u_n.reserve(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) {
        tr.u.push_back(eval_field(sol, quad.points[i]));
        tr.u_n.push_back(quad.normals[i].cast<Complex>().dot(eval_gradient(sol, quad.points[i])));
    }
    return tr;
}

/// Analytic far field of the kernel sum under the e^{ikr}/r convention:
/// g(x, y) -> (e^{ik|x|}/(4 pi |x|)) e^{-ik beta.y}, so A carries a 1/(4 pi).
inline Complex far_field_at(const ScatterSolution& sol, const Direction& beta) {
    Complex a{0.0, 0.0};
    for (std::size_t j = 0; j < sol.sources.size(); ++j)
        a += sol.coeffs(j) * std::exp(Complex(0.0, -sol.k * beta.v.dot(sol.sources[j])));
    return a / (4.0 * kPi);
}

struct DirectionGrid {
    std::vector<Vec3> directions;
    std::vector<double> weights; // solid-angle weights, sum = 4 pi
    std::vector<double> thetas, phis;
    int n_theta = 0, n_phi = 0;
};

inline DirectionGrid make_direction_grid(int n_theta, int n_phi) {
    if (n_theta < 2 || n_phi < 4) throw std::invalid_argument("make_direction_grid: grid too small");
    const auto gl = gauss_legendre(n_theta);
    DirectionGrid g;
    g.n_theta = n_theta;
    g.n_phi = n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        const double w = gl.weights[i] * (2.0 * kPi / n_phi);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * kPi * j / n_phi;
            g.directions.push_back(Direction::from_angles(theta, phi).v);
            g.weights.push_back(w);
            g.thetas.push_back(theta);
            g.phis.push_back(phi);
        }
    }
    return g;
}

struct FarFieldPattern {
    DirectionGrid grid;
    std::vector<Complex> values;
    Vec3 alpha = Vec3::UnitZ(); // incident direction (plane-wave excitations)
    double k = 0.0;
};

inline FarFieldPattern far_field(const ScatterSolution& sol, const DirectionGrid& grid) {
    FarFieldPattern p;
    p.grid = grid;
    p.k = sol.k;
    if (const auto* pw = std::get_if<PlaneWave>(&sol.excitation)) p.alpha = pw->alpha.v;
    p.values.reserve(grid.directions.size());
    for (const auto& d : grid.directions) p.values.push_back(far_field_at(sol, Direction(d)));
    return p;
}

/// L2(S^2) norm of the pattern via its grid weights.
inline double pattern_l2_norm(const FarFieldPattern& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i)
        acc += p.grid.weights[i] * std::norm(p.values[i]);
    return std::sqrt(acc);
}

/// Obstacle Green's function: G = g(x, y) + scattered part, Gamma_j G = 0 on
/// S, radiating.  One point-source solve per call.
inline Complex greens_function(const StarShape& shape, const BoundaryCondition& bc,
                               const WaveContext& wave, const Vec3& x, const Vec3& y,
                               const SolveOptions& opts = {}) {
    const auto sol = solve(shape, bc, PointSource{y}, wave, opts);
    return eval_field(sol, x);
}

} // namespace obscat
