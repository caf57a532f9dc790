#pragma once

// Quantitative cross-checks between independently computed quantities of the
// scattering problem: reciprocity of the far field, Green's-function
// asymptotics, the global two-obstacle perturbation identity, the far-field
// expansion rate, double-layer reproduction of Dirichlet data, and
// fixed-incidence far-field gap scans over shape families.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obscat/forward.hpp"

namespace obscat {

class OutOfScopeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DecayReport {
    std::vector<double> abscissae;
    std::vector<double> residuals;
    double fitted_slope = 0.0;
    double slope_ci = 0.0; // standard error of the log-log fit
    bool monotone = true;
};

namespace detail {

inline DecayReport fit_decay(std::vector<double> abscissae, std::vector<double> residuals) {
    if (abscissae.size() < 3 || abscissae.size() != residuals.size())
        throw std::invalid_argument("fit_decay: need >= 3 matched samples");
    DecayReport rep;
    rep.abscissae = std::move(abscissae);
    rep.residuals = std::move(residuals);
    const std::size_t n = rep.abscissae.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(rep.abscissae[i]);
        ly[i] = std::log(std::max(rep.residuals[i], 1e-300));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    rep.fitted_slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - rep.fitted_slope * sx) / n;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (intercept + rep.fitted_slope * lx[i]);
        sse += e * e;
    }
    if (n > 2) rep.slope_ci = std::sqrt(sse / (n - 2) / (sxx - sx * sx / n));
    for (std::size_t i = 1; i < n; ++i)
        if (rep.residuals[i] > rep.residuals[i - 1]) rep.monotone = false;
    return rep;
}

} // namespace detail

/// Receding source ray y0 = -tau * alpha0 + eta, eta orthogonal to alpha0.
struct RaySpec {
    Direction alpha0;
    Vec3 eta = Vec3::Zero();
    std::vector<double> tau_values;

    RaySpec(const Direction& a, const Vec3& e, std::vector<double> taus)
        : alpha0(a), eta(e), tau_values(std::move(taus)) {
        if (std::abs(eta.dot(alpha0.v)) > 1e-12)
            throw std::invalid_argument("RaySpec: eta must be orthogonal to alpha0");
        if (tau_values.size() < 3) throw std::invalid_argument("RaySpec: need >= 3 tau values");
    }
};

/// Max over the given (alpha, beta) pairs of
/// |A(-alpha, -beta) - A(beta, alpha)| / max |A|, two solves per pair.
inline double check_reciprocity(const StarShape& shape, const BoundaryCondition& bc, double k,
                                const std::vector<std::pair<Direction, Direction>>& pairs,
                                const SolveOptions& opts = {}) {
    if (pairs.size() < 5) throw std::invalid_argument("check_reciprocity: need >= 5 pairs");
    const WaveContext wave(k);
    double worst = 0.0;
    for (const auto& [alpha, beta] : pairs) {
        const auto sol_a = solve(shape, bc, PlaneWave{alpha}, wave, opts);
        const auto sol_mb = solve(shape, bc, PlaneWave{Direction(-beta.v)}, wave, opts);
        const Complex a_fwd = far_field_at(sol_a, beta);
        const Complex a_rev = far_field_at(sol_mb, Direction(-alpha.v));
        const double scale = std::max(std::abs(a_fwd), std::abs(a_rev));
        worst = std::max(worst, std::abs(a_fwd - a_rev) / scale);
    }
    return worst;
}

/// Residual |G(x, y0)/g(|y0|) - u(x, alpha0)| along the receding ray; the
/// remainder is O(1/|y0|^2) absolute, so the normalized residual decays with
/// log-log slope -1.
inline DecayReport check_lemma1(const StarShape& shape, const BoundaryCondition& bc, double k,
                                const Vec3& x, const RaySpec& ray, const SolveOptions& opts = {}) {
    const double diam = diameter(shape);
    for (double tau : ray.tau_values)
        if (tau < 10.0 * diam)
            throw std::invalid_argument("check_lemma1: tau below 10 * diameter");
    const WaveContext wave(k);
    const auto sol_pw = solve(shape, bc, PlaneWave{ray.alpha0}, wave, opts);
    const Complex u_ref = eval_field(sol_pw, x);

    std::vector<double> res;
    for (double tau : ray.tau_values) {
        const Vec3 y0 = -tau * ray.alpha0.v + ray.eta;
        const Complex G = greens_function(shape, bc, wave, x, y0, opts);
        const Complex g = std::exp(Complex(0.0, k * y0.norm())) / (4.0 * kPi * y0.norm());
        res.push_back(std::abs(G / g - u_ref));
    }
    auto rep = detail::fit_decay(ray.tau_values, res);
    return rep;
}

/// Free-space variant of the same ray limit (no obstacle, no solves):
/// |g(x, y0)/g(|y0|) - e^{ik alpha0 . x}|.
inline DecayReport check_lemma1_vacuum(double k, const Vec3& x, const RaySpec& ray) {
    std::vector<double> res;
    for (double tau : ray.tau_values) {
        const Vec3 y0 = -tau * ray.alpha0.v + ray.eta;
        const Complex g_xy = detail::fundamental(k, x, y0);
        const Complex g0 = std::exp(Complex(0.0, k * y0.norm())) / (4.0 * kPi * y0.norm());
        res.push_back(std::abs(g_xy / g0 - std::exp(Complex(0.0, k * ray.alpha0.v.dot(x)))));
    }
    return detail::fit_decay(ray.tau_values, res);
}

struct ObstaclePair {
    // Nested: shape1 strictly inside shape2.  Coincident: same surface.
    enum class Relation { Disjoint, Nested, Coincident };
    StarShape shape1, shape2;
    Relation relation;
    BoundaryCondition bc1, bc2;
};

/// Classifies the pair geometry from quadrature samples; intersecting pairs
/// are rejected (the joint surface would need an edge-aware limit around the
/// intersection curve, which this toolkit does not implement).
inline ObstaclePair make_obstacle_pair(const StarShape& shape1, const StarShape& shape2,
                                       const BoundaryCondition& bc1, const BoundaryCondition& bc2,
                                       int n_theta = 24) {
    {
        // identical surfaces: the joint surface degenerates to the surface itself
        const int nmax = std::max(shape1.coeffs.size(), shape2.coeffs.size());
        double dc = (shape1.center - shape2.center).norm();
        for (int i = 0; i < nmax; ++i) {
            const double c1 = (i < shape1.coeffs.size()) ? shape1.coeffs[i] : 0.0;
            const double c2 = (i < shape2.coeffs.size()) ? shape2.coeffs[i] : 0.0;
            dc += std::abs(c1 - c2);
        }
        if (dc < 1e-12)
            return {shape1, shape2, ObstaclePair::Relation::Coincident, bc1, bc2};
    }
    const auto q1 = build_quadrature(shape1, n_theta, 2 * n_theta);
    const auto q2 = build_quadrature(shape2, n_theta, 2 * n_theta);
    std::size_t in12 = 0, in21 = 0;
    for (const auto& p : q1.points)
        if (inside_shape(shape2, p, 1e-12)) ++in12;
    for (const auto& p : q2.points)
        if (inside_shape(shape1, p, 1e-12)) ++in21;

    ObstaclePair pair{shape1, shape2, ObstaclePair::Relation::Disjoint, bc1, bc2};
    if (in12 == q1.size() && in21 == 0) {
        pair.relation = ObstaclePair::Relation::Nested;
        return pair;
    }
    if (in12 == 0 && in21 == 0) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& p : q1.points)
            for (const auto& s : q2.points) dmin = std::min(dmin, (p - s).norm());
        if (dmin > 1e-9 && !inside_shape(shape2, shape1.center) &&
            !inside_shape(shape1, shape2.center))
            return pair;
    }
    throw OutOfScopeError(
        "intersecting obstacle pair is out of scope: the joint-surface integral requires an "
        "edge-aware limit around the intersection curve");
}

struct Lemma2Result {
    Complex lhs;            // 4 pi (A1 - A2)
    Complex rhs;            // joint-surface integral of u1 u2N - u1N u2
    double rel_error = 0.0;
    double dropped_term = 0.0; // |integral of the u2-trace term on S2| (nested Dirichlet)
};

/// Global perturbation identity: 4 pi [A1(beta, alpha) - A2(beta, alpha)]
/// equals the integral over the joint surface of u1(., alpha) u2N(., -beta)
/// - u1N(., alpha) u2(., -beta).  Three solves.
inline Lemma2Result check_lemma2(const ObstaclePair& pair, double k, const Direction& alpha,
                                 const Direction& beta, int n_theta = 32,
                                 const SolveOptions& opts = {}) {
    const WaveContext wave(k);
    const auto sol1_a = solve(pair.shape1, pair.bc1, PlaneWave{alpha}, wave, opts);
    const auto sol2_a = solve(pair.shape2, pair.bc2, PlaneWave{alpha}, wave, opts);
    const auto sol2_mb = solve(pair.shape2, pair.bc2, PlaneWave{Direction(-beta.v)}, wave, opts);

    Lemma2Result out;
    out.lhs = 4.0 * kPi * (far_field_at(sol1_a, beta) - far_field_at(sol2_a, beta));

    std::vector<const SurfaceQuadrature*> pieces;
    const auto q2 = build_quadrature(pair.shape2, n_theta, 2 * n_theta);
    SurfaceQuadrature q1;
    if (pair.relation == ObstaclePair::Relation::Disjoint) {
        q1 = build_quadrature(pair.shape1, n_theta, 2 * n_theta);
        pieces = {&q1, &q2};
    } else {
        // nested or coincident: the joint surface is the outer surface alone
        pieces = {&q2};
    }

    Complex rhs{0.0, 0.0};
    double dropped = 0.0;
    for (const auto* q : pieces) {
        const auto tr1 = boundary_trace(sol1_a, *q);
        const auto tr2 = boundary_trace(sol2_mb, *q);
        Complex u2_part{0.0, 0.0};
        for (std::size_t i = 0; i < q->size(); ++i) {
            rhs += q->weights[i] * (tr1.u[i] * tr2.u_n[i] - tr1.u_n[i] * tr2.u[i]);
            u2_part += q->weights[i] * tr1.u_n[i] * tr2.u[i];
        }
        if (q == &q2) dropped = std::abs(u2_part);
    }
    out.rhs = rhs;
    out.dropped_term = dropped;
    const double scale = std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-300});
    out.rel_error = std::abs(out.lhs - out.rhs) / scale;
    return out;
}

/// Residual of the far-field expansion u = e^{ik alpha.x} + A e^{ik|x|}/|x|
/// sampled at x = radius * beta; expected log-log slope -2.
inline DecayReport check_farfield_expansion(const StarShape& shape, const BoundaryCondition& bc,
                                            double k, const Direction& alpha,
                                            const Direction& beta,
                                            const std::vector<double>& radii,
                                            const SolveOptions& opts = {}) {
    const double diam = diameter(shape);
    for (double r : radii)
        if (r < 10.0 * diam)
            throw std::invalid_argument("check_farfield_expansion: radius below 10 * diameter");
    const WaveContext wave(k);
    const auto sol = solve(shape, bc, PlaneWave{alpha}, wave, opts);
    const Complex A = far_field_at(sol, beta);
    std::vector<double> res;
    for (double r : radii) {
        const Vec3 x = r * beta.v;
        const Complex u = eval_field(sol, x);
        const Complex inc = std::exp(Complex(0.0, k * alpha.v.dot(x)));
        const Complex tail = A * std::exp(Complex(0.0, k * r)) / r;
        res.push_back(std::abs(u - inc - tail));
    }
    return detail::fit_decay(radii, res);
}

struct Lemma5Result {
    std::vector<double> distances;       // absolute distances from the surface
    std::vector<double> rel_errors;      // |W_quad - W_direct| / |W_direct|
    std::vector<double> cap_fractions;   // kernel-mass fraction in the cap around t
    std::vector<double> solve_residuals; // certified residual of each point-source solve
    bool cap_monotone = false;
    int n_theta_used = 0;
};

/// Double-layer reproduction of the exterior Dirichlet solution:
/// W(x) = integral over S of dG/dN(x, s) f(s) ds, cross-checked against a
/// direct boundary-data solve, with a kernel-concentration diagnostic as the
/// evaluation point approaches the surface along the normal.
inline Lemma5Result check_lemma5(const StarShape& shape, double k,
                                 const std::function<Complex(double, double)>& f,
                                 const std::vector<double>& rel_distances = {0.5, 0.1, 0.02},
                                 double cap_radius_rel = 0.3, int n_theta = 32,
                                 int n_theta_cap = 128, const SolveOptions& opts = {}) {
    const WaveContext wave(k);
    const double diam = diameter(shape);
    const auto direct = solve_dirichlet_data(shape, wave, f, opts);

    // Approach point t and its outward normal, taken off the symmetry axes.
    const auto tq = build_quadrature(shape, 16, 32);
    const std::size_t ti = tq.size() / 2 + 3;
    const Vec3 t = tq.points[ti];
    const Vec3 nt = tq.normals[ti];
    const double rho_cap = cap_radius_rel * diam;

    Lemma5Result out;
    for (double rel_d : rel_distances) {
        const double d = rel_d * diam;
        const Vec3 x = t + d * nt;
        // The Green's function with source x close to the surface is nearly
        // singular, which the plain kernel fit cannot resolve.  Split off the
        // image of x across the tangent plane at t: the image source lies
        // inside the obstacle, so g(., x_img) is a radiating exterior
        // solution, and the remaining boundary data is smooth on the scale
        // sqrt(d * diameter) instead of d.
        const Vec3 x_img = t - d * nt;
        auto v_data = [&](double th, double ph) {
            const Vec3 s =
                shape.center + shape.radius(th, ph) * Direction::from_angles(th, ph).v;
            return -detail::fundamental(k, s, x) + detail::fundamental(k, s, x_img);
        };
        SolveOptions opts_d = opts;
        if (rel_d < 0.3) {
            // the tangent-plane image leaves a curvature remainder; denser
            // kernels and a relaxed (but still certified) gate
            opts_d.resolution_scale = std::max(opts.resolution_scale, 1.5);
            opts_d.tol = std::max(opts.tol, 5e-2);
        } else {
            opts_d.tol = std::max(opts.tol, 1e-5);
        }
        const auto v = solve_dirichlet_data(shape, wave, v_data, opts_d);
        out.solve_residuals.push_back(v.boundary_residual);

        // Adaptive refinement: double n_theta until W stabilizes or the cap.
        Complex W{0.0, 0.0};
        double total_mass = 0.0, cap_mass = 0.0;
        int nt_used = n_theta;
        Complex W_prev{0.0, 0.0};
        for (int ntq = n_theta;; ntq *= 2) {
            const auto q = build_quadrature(shape, ntq, 2 * ntq);
            const auto tr = boundary_trace(v, q); // smooth remainder of G(x, s)
            W = {0.0, 0.0};
            total_mass = cap_mass = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const Eigen::Vector3cd gg =
                    detail::fundamental_grad(k, q.points[i], x) -
                    detail::fundamental_grad(k, q.points[i], x_img);
                const Complex g2n = q.normals[i].cast<Complex>().dot(gg) + tr.u_n[i];
                W += q.weights[i] * g2n * f(q.thetas[i], q.phis[i]);
                const double m = q.weights[i] * std::abs(g2n);
                total_mass += m;
                if ((q.points[i] - t).norm() <= rho_cap) cap_mass += m;
            }
            nt_used = ntq;
            if (ntq > n_theta && std::abs(W - W_prev) <= 1e-4 * std::abs(W)) break;
            if (2 * ntq > n_theta_cap) {
                if (ntq > n_theta && std::abs(W - W_prev) > 0.2 * std::abs(W))
                    throw std::runtime_error(
                        "check_lemma5: near-boundary quadrature did not converge at cap "
                        "n_theta=" + std::to_string(ntq));
                break;
            }
            W_prev = W;
        }

        const Complex W_ref = eval_field(direct, x);
        out.distances.push_back(d);
        out.rel_errors.push_back(std::abs(W - W_ref) / std::abs(W_ref));
        out.cap_fractions.push_back(cap_mass / total_mass);
        out.n_theta_used = std::max(out.n_theta_used, nt_used);
    }
    out.cap_monotone = true;
    for (std::size_t i = 1; i < out.cap_fractions.size(); ++i)
        if (out.cap_fractions[i] <= out.cap_fractions[i - 1]) out.cap_monotone = false;
    return out;
}

struct GapScanRow {
    std::string shape_id;
    double d_shape = 0.0;
    double d_ff = 0.0;
    bool ok = false;
    std::string error;
};

namespace detail {

inline double shape_distance(const StarShape& a, const StarShape& b) {
    const int n = std::max(a.coeffs.size(), b.coeffs.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ca = (i < a.coeffs.size()) ? a.coeffs[i] : 0.0;
        const double cb = (i < b.coeffs.size()) ? b.coeffs[i] : 0.0;
        acc += (ca - cb) * (ca - cb);
    }
    acc += (a.center - b.center).squaredNorm();
    return std::sqrt(acc);
}

} // namespace detail

/// Fixed-incidence, fixed-frequency far-field gap of each candidate against
/// the truth shape; solver failures are recorded per row and the scan goes on.
inline std::vector<GapScanRow> uniqueness_gap_scan(
    const StarShape& truth, const BoundaryCondition& bc, double k0, const Direction& alpha0,
    const std::vector<std::pair<std::string, StarShape>>& family, const DirectionGrid& grid,
    const SolveOptions& opts = {}) {
    const WaveContext wave(k0);
    const auto sol_truth = solve(truth, bc, PlaneWave{alpha0}, wave, opts);
    const auto ff_truth = far_field(sol_truth, grid);

    std::vector<GapScanRow> rows;
    for (const auto& [id, cand] : family) {
        GapScanRow row;
        row.shape_id = id;
        row.d_shape = detail::shape_distance(cand, truth);
        try {
            const auto sol_c = solve(cand, bc, PlaneWave{alpha0}, wave, opts);
            double acc = 0.0;
            for (std::size_t i = 0; i < grid.directions.size(); ++i) {
                const Complex ac = far_field_at(sol_c, Direction(grid.directions[i]));
                acc += grid.weights[i] * std::norm(ac - ff_truth.values[i]);
            }
            row.d_ff = std::sqrt(acc);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

struct FluxIdentityResult {
    double forward_imag = 0.0; // Im A(alpha, alpha, k)
    double flux = 0.0;         // (k / 4 pi) * integral |A|^2 dbeta
    double rel_error = 0.0;
};

/// Optical-theorem balance under the e^{ikr}/r convention:
/// Im A(alpha, alpha, k) = (k / 4 pi) * integral over S^2 of |A|^2.
/// For absorbing impedance (Im h > 0) the left side strictly exceeds the right.
inline FluxIdentityResult flux_identity(const ScatterSolution& sol, const DirectionGrid& grid) {
    const auto* pw = std::get_if<PlaneWave>(&sol.excitation);
    if (!pw) throw std::invalid_argument("flux_identity: plane-wave solution required");
    FluxIdentityResult r;
    r.forward_imag = far_field_at(sol, pw->alpha).imag();
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.directions.size(); ++i)
        acc += grid.weights[i] * std::norm(far_field_at(sol, Direction(grid.directions[i])));
    r.flux = sol.k / (4.0 * kPi) * acc;
    r.rel_error = std::abs(r.forward_imag - r.flux) / std::max(std::abs(r.forward_imag), 1e-300);
    return r;
}

} // namespace obscat
