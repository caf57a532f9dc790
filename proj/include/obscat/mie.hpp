#pragma once

// Partial-wave series for a sphere under Dirichlet / Neumann / impedance
// boundary conditions.  Serves as the independent ground truth for the
// fundamental-solutions solver.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "obscat/geometry.hpp"
#include "obscat/specialfn.hpp"

namespace obscat {

struct BoundaryCondition {
    enum class Tag { Dirichlet, Neumann, Impedance };
    Tag tag = Tag::Dirichlet;
    Complex h{0.0, 0.0};

    static BoundaryCondition dirichlet() { return {Tag::Dirichlet, {}}; }
    static BoundaryCondition neumann() { return {Tag::Neumann, {}}; }
    static BoundaryCondition impedance(Complex h) {
        if (h.imag() < 0.0)
            throw std::invalid_argument("BoundaryCondition: impedance requires Im h >= 0");
        return {Tag::Impedance, h};
    }
};

struct MieSeries {
    double a = 1.0;
    double k = 1.0;
    BoundaryCondition bc;
    int lmax_used = 0;
    std::vector<Complex> partial_coeffs; // c_l
};

inline int mie_default_lmax(double ka) {
    return static_cast<int>(std::ceil(ka + 8.0 * std::cbrt(ka) + 20.0));
}

inline MieSeries mie_coefficients(double a, double k, const BoundaryCondition& bc, int lmax = -1) {
    if (!(a > 0.0) || !(k > 0.0)) throw std::invalid_argument("mie_coefficients: a, k > 0 required");
    const double ka = k * a;
    if (ka > 60.0) throw std::invalid_argument("mie_coefficients: ka > 60 unsupported");
    if (lmax < 0) lmax = mie_default_lmax(ka);
    if (lmax > kMaxBesselOrder) lmax = kMaxBesselOrder;

    const auto j = sph_bessel_j_all(lmax + 1, ka);
    const auto y = sph_bessel_y_all(lmax + 1, ka);
    MieSeries s;
    s.a = a;
    s.k = k;
    s.bc = bc;
    s.lmax_used = lmax;
    s.partial_coeffs.resize(lmax + 1);
    for (int l = 0; l <= lmax; ++l) {
        const Complex hl(j[l], y[l]);
        const double jp = (l == 0) ? -j[1] : j[l - 1] - (l + 1) / ka * j[l];
        const double yp = (l == 0) ? -y[1] : y[l - 1] - (l + 1) / ka * y[l];
        const Complex hp(jp, yp);
        Complex c;
        switch (bc.tag) {
            case BoundaryCondition::Tag::Dirichlet:
                c = -j[l] / hl;
                break;
            case BoundaryCondition::Tag::Neumann:
                c = -jp / hp;
                break;
            case BoundaryCondition::Tag::Impedance:
                c = -(k * jp + bc.h * j[l]) / (k * hp + bc.h * hl);
                break;
        }
        s.partial_coeffs[l] = c;
    }

    // Tail convergence: |c_l| (2l+1) must be negligible at the cutoff.
    double cmax = 0.0;
    for (int l = 0; l <= lmax; ++l)
        cmax = std::max(cmax, std::abs(s.partial_coeffs[l]) * (2.0 * l + 1.0));
    for (int l = std::max(0, lmax - 2); l <= lmax; ++l)
        if (std::abs(s.partial_coeffs[l]) * (2.0 * l + 1.0) > 1e-16 * cmax)
            throw std::runtime_error("mie_coefficients: series tail not converged at lmax=" +
                                     std::to_string(lmax));
    return s;
}

/// Far-field pattern A(beta, alpha) as a function of cos(angle) = beta . alpha,
/// under the e^{ikr}/r convention: A = (1/(ik)) sum (2l+1) c_l P_l.
inline Complex mie_far_field(const MieSeries& s, double cos_angle) {
    const auto p = legendre_p_all(s.lmax_used, cos_angle);
    Complex acc{0.0, 0.0};
    for (int l = 0; l <= s.lmax_used; ++l)
        acc += (2.0 * l + 1.0) * s.partial_coeffs[l] * p[l];
    return acc / (Complex(0.0, 1.0) * s.k);
}

/// Total near field u(x) for incidence alpha, obstacle centered at origin.
inline Complex mie_total_field(const MieSeries& s, const Vec3& x, const Direction& alpha) {
    const double r = x.norm();
    if (!(r > 0.0)) throw std::invalid_argument("mie_total_field: x at center");
    const double kr = s.k * r;
    const double ca = std::clamp(x.dot(alpha.v) / r, -1.0, 1.0);
    const auto j = sph_bessel_j_all(s.lmax_used, kr);
    const auto y = sph_bessel_y_all(s.lmax_used, kr);
    const auto p = legendre_p_all(s.lmax_used, ca);
    Complex acc{0.0, 0.0};
    Complex il{1.0, 0.0};
    for (int l = 0; l <= s.lmax_used; ++l) {
        const Complex hl(j[l], y[l]);
        acc += il * (2.0 * l + 1.0) * (j[l] + s.partial_coeffs[l] * hl) * p[l];
        il *= Complex(0.0, 1.0);
    }
    return acc;
}

/// Radial derivative du/dr of the total field (sphere normal derivative).
inline Complex mie_radial_deriv(const MieSeries& s, const Vec3& x, const Direction& alpha) {
    const double r = x.norm();
    const double kr = s.k * r;
    const double ca = std::clamp(x.dot(alpha.v) / r, -1.0, 1.0);
    const auto j = sph_bessel_j_all(s.lmax_used + 1, kr);
    const auto y = sph_bessel_y_all(s.lmax_used + 1, kr);
    const auto p = legendre_p_all(s.lmax_used, ca);
    Complex acc{0.0, 0.0};
    Complex il{1.0, 0.0};
    for (int l = 0; l <= s.lmax_used; ++l) {
        const double jp = (l == 0) ? -j[1] : j[l - 1] - (l + 1) / kr * j[l];
        const double yp = (l == 0) ? -y[1] : y[l - 1] - (l + 1) / kr * y[l];
        acc += il * (2.0 * l + 1.0) * (jp + s.partial_coeffs[l] * Complex(jp, yp)) * p[l] * s.k;
        il *= Complex(0.0, 1.0);
    }
    // Note: for Dirichlet/Neumann the j-part alone is real; kept complex for impedance.
    return acc;
}

} // namespace obscat
