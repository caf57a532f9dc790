#pragma once

// Star-shaped surfaces parametrized by real spherical-harmonic radial maps,
// and spectral surface quadrature (Gauss-Legendre in cos theta, trapezoid
// in phi) with analytic normals and area weights.

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

#include "obscat/specialfn.hpp"

namespace obscat {

using Vec3 = Eigen::Vector3d;

class StarShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unit direction on S^2.
struct Direction {
    Vec3 v;
    explicit Direction(const Vec3& d) : v(d) {
        const double n = d.norm();
        if (std::abs(n - 1.0) > 1e-12) {
            if (n <= 0.0) throw std::invalid_argument("Direction: zero vector");
            v = d / n;
        }
    }
    static Direction from_angles(double theta, double phi) {
        return Direction(Vec3(std::sin(theta) * std::cos(phi),
                              std::sin(theta) * std::sin(phi), std::cos(theta)));
    }
};

/// Radial map r(theta, phi) = sum c_{l,m} Y_{l,m}, coeffs in sh_index order.
struct StarShape {
    int lmax = 0;
    Eigen::VectorXd coeffs;
    Vec3 center = Vec3::Zero();

    double radius(double theta, double phi) const {
        const auto b = eval_real_sph_harm_all(lmax, theta, phi);
        double r = 0.0;
        for (int i = 0; i < coeffs.size(); ++i) r += coeffs[i] * b.y[i];
        return r;
    }

    /// r and its angular derivatives at one node.
    void radius_derivs(double theta, double phi, double& r, double& rt, double& rp) const {
        const auto b = eval_real_sph_harm_all(lmax, theta, phi);
        r = rt = rp = 0.0;
        for (int i = 0; i < coeffs.size(); ++i) {
            r += coeffs[i] * b.y[i];
            rt += coeffs[i] * b.dtheta[i];
            rp += coeffs[i] * b.dphi[i];
        }
    }
};

struct SurfaceQuadrature {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;        // unit, outward
    std::vector<double> weights;      // area weights, sum ~ area(S)
    std::vector<double> solid_weights; // solid-angle weights, sum = 4 pi
    std::vector<double> thetas, phis;
    int n_theta = 0, n_phi = 0;
    Vec3 center = Vec3::Zero();

    std::size_t size() const { return points.size(); }
};

namespace detail {

inline void check_star_shaped(const StarShape& s, int n_theta, int n_phi) {
    const auto gl = gauss_legendre(n_theta);
    for (int i = 0; i < n_theta; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * kPi * j / n_phi;
            const double r = s.radius(theta, phi);
            if (!(r > 0.0))
                throw StarShapeError("surface not star-shaped: r = " + std::to_string(r) +
                                     " at theta=" + std::to_string(theta) +
                                     ", phi=" + std::to_string(phi));
        }
    }
}

} // namespace detail

inline StarShape make_star_shape(int lmax, const Eigen::VectorXd& coeffs,
                                 const Vec3& center = Vec3::Zero()) {
    if (lmax < 0) throw std::invalid_argument("make_star_shape: lmax < 0");
    if (coeffs.size() != (lmax + 1) * (lmax + 1))
        throw std::invalid_argument("make_star_shape: coeffs length != (lmax+1)^2");
    StarShape s;
    s.lmax = lmax;
    s.coeffs = coeffs;
    s.center = center;
    const int nt = std::max(32, 2 * (lmax + 1));
    detail::check_star_shaped(s, nt, 2 * nt);
    return s;
}

inline StarShape shape_sphere(double radius, const Vec3& center = Vec3::Zero()) {
    if (!(radius > 0.0)) throw std::invalid_argument("shape_sphere: radius must be positive");
    Eigen::VectorXd c(1);
    c[0] = radius * std::sqrt(4.0 * kPi);
    return make_star_shape(0, c, center);
}

inline StarShape shape_perturb(const StarShape& base, int l, int m, double delta) {
    if (l < 0 || std::abs(m) > l) throw std::invalid_argument("shape_perturb: bad (l, m)");
    const int lmax = std::max(base.lmax, l);
    Eigen::VectorXd c = Eigen::VectorXd::Zero((lmax + 1) * (lmax + 1));
    c.head(base.coeffs.size()) = base.coeffs;
    c[sh_index(l, m)] += delta;
    return make_star_shape(lmax, c, base.center);
}

/// Max radial extent over a sampling grid; diameter() = 2 * this.
inline double max_radius(const StarShape& s) {
    const int nt = std::max(24, 2 * (s.lmax + 1));
    const auto gl = gauss_legendre(nt);
    double rmax = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        for (int j = 0; j < 2 * nt; ++j)
            rmax = std::max(rmax, s.radius(theta, 2.0 * kPi * j / (2 * nt)));
    }
    return rmax;
}

inline double diameter(const StarShape& s) { return 2.0 * max_radius(s); }

inline SurfaceQuadrature build_quadrature(const StarShape& shape, int n_theta, int n_phi) {
    if (n_theta < 8 || n_phi < 16)
        throw std::invalid_argument("build_quadrature: need n_theta >= 8, n_phi >= 16");
    detail::check_star_shaped(shape, 2 * n_theta, 2 * n_phi);

    const auto gl = gauss_legendre(n_theta);
    SurfaceQuadrature q;
    q.n_theta = n_theta;
    q.n_phi = n_phi;
    q.center = shape.center;
    const std::size_t n = static_cast<std::size_t>(n_theta) * n_phi;
    q.points.reserve(n);
    q.normals.reserve(n);
    q.weights.reserve(n);
    q.solid_weights.reserve(n);
    q.thetas.reserve(n);
    q.phis.reserve(n);

    for (int i = 0; i < n_theta; ++i) {
        const double ct = gl.nodes[i];
        const double theta = std::acos(ct);
        const double st = std::sin(theta);
        const double w_solid = gl.weights[i] * (2.0 * kPi / n_phi);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * kPi * j / n_phi;
            double r, rt, rp;
            shape.radius_derivs(theta, phi, r, rt, rp);
            const double cp = std::cos(phi), sp = std::sin(phi);
            const Vec3 rhat(st * cp, st * sp, ct);
            const Vec3 that(ct * cp, ct * sp, -st);
            const Vec3 phat(-sp, cp, 0.0);
            // X_theta x X_phi = r^2 st rhat - r rt st that - r rp phat
            const Vec3 nvec = r * r * st * rhat - r * rt * st * that - r * rp * phat;
            const double nnorm = nvec.norm();
            q.points.push_back(shape.center + r * rhat);
            q.normals.push_back(nvec / nnorm);
            q.weights.push_back(w_solid * nnorm / st);
            q.solid_weights.push_back(w_solid);
            q.thetas.push_back(theta);
            q.phis.push_back(phi);
        }
    }
    return q;
}

/// Project a band-limited radial function onto the spherical-harmonic basis.
/// Exact (up to quadrature precision) for functions of degree <= lmax.
inline StarShape project_radial(int lmax, const std::function<double(double, double)>& radial,
                                const Vec3& center = Vec3::Zero()) {
    const int nt = 2 * (lmax + 1) + 8;
    const int np = 2 * nt;
    const auto gl = gauss_legendre(nt);
    Eigen::VectorXd c = Eigen::VectorXd::Zero((lmax + 1) * (lmax + 1));
    for (int i = 0; i < nt; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        const double w = gl.weights[i] * (2.0 * kPi / np);
        for (int j = 0; j < np; ++j) {
            const double phi = 2.0 * kPi * j / np;
            const double r = radial(theta, phi);
            const auto b = eval_real_sph_harm_all(lmax, theta, phi);
            for (int idx = 0; idx < c.size(); ++idx) c[idx] += w * r * b.y[idx];
        }
    }
    return make_star_shape(lmax, c, center);
}

/// Rotated copy of a shape: radial map r'(xhat) = r(R^T xhat), center R * center.
inline StarShape rotate_shape(const StarShape& s, const Eigen::Matrix3d& rot) {
    auto radial = [&](double theta, double phi) {
        const Vec3 xhat = Direction::from_angles(theta, phi).v;
        const Vec3 y = rot.transpose() * xhat;
        const double th = std::acos(std::clamp(y.z(), -1.0, 1.0));
        const double ph = std::atan2(y.y(), y.x());
        return s.radius(th, ph);
    };
    return project_radial(s.lmax, radial, rot * s.center);
}

/// True if x lies strictly inside the surface (by margin, relative to r).
inline bool inside_shape(const StarShape& s, const Vec3& x, double rel_margin = 1e-9) {
    const Vec3 d = x - s.center;
    const double rho = d.norm();
    if (rho == 0.0) return true;
    const double theta = std::acos(std::clamp(d.z() / rho, -1.0, 1.0));
    const double phi = std::atan2(d.y(), d.x());
    return rho < s.radius(theta, phi) * (1.0 - rel_margin);
}

} // namespace obscat
