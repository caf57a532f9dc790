#pragma once

// Scalar special functions: spherical Bessel/Hankel functions, Legendre
// polynomials, and real orthonormal spherical harmonics.  All recurrences
// are self-contained; no external special-function library is used.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace obscat {

using Complex = std::complex<double>;

inline constexpr int kMaxBesselOrder = 200;
inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace detail

/// j_0..j_lmax by upward recurrence for x > lmax, Miller-style downward
/// recurrence normalized against j_0 otherwise.
inline std::vector<double> sph_bessel_j_all(int lmax, double x) {
    detail::require(lmax >= 0 && lmax <= kMaxBesselOrder, "sph_bessel_j: order out of range");
    detail::require(x > 0.0, "sph_bessel_j: x must be positive");
    std::vector<double> j(lmax + 1);
    const double j0 = std::sin(x) / x;
    j[0] = j0;
    if (lmax == 0) return j;
    const double j1 = (std::sin(x) / x - std::cos(x)) / x;
    j[1] = j1;
    if (lmax == 1) return j;

    if (x > static_cast<double>(lmax)) {
        for (int l = 1; l < lmax; ++l)
            j[l + 1] = (2 * l + 1) / x * j[l] - j[l - 1];
        return j;
    }

    // Downward recurrence from a padded start order, rescaling on overflow.
    const int lstart = lmax + 26 + static_cast<int>(x);
    double fp = 0.0;          // f_{l+1}
    double fc = 1e-30;        // f_l
    std::vector<double> f(lmax + 1, 0.0);
    for (int l = lstart; l >= 1; --l) {
        const double fm = (2 * l + 1) / x * fc - fp;
        fp = fc;
        fc = fm;
        if (l - 1 <= lmax) f[l - 1] = fc;
        if (std::abs(fc) > 1e250) {
            fc *= 1e-250;
            fp *= 1e-250;
            for (auto& v : f) v *= 1e-250;
        }
    }
    const double scale = j0 / f[0];
    if (!std::isfinite(scale)) throw std::range_error("sph_bessel_j: normalization overflow");
    for (int l = 0; l <= lmax; ++l) j[l] = f[l] * scale;
    j[1] = j1; // exact low orders
    return j;
}

inline double sph_bessel_j(int l, double x) { return sph_bessel_j_all(l, x)[l]; }

/// y_0..y_lmax by upward recurrence (always stable for y_l).
inline std::vector<double> sph_bessel_y_all(int lmax, double x) {
    detail::require(lmax >= 0 && lmax <= kMaxBesselOrder, "sph_bessel_y: order out of range");
    detail::require(x > 0.0, "sph_bessel_y: x must be positive");
    std::vector<double> y(lmax + 1);
    y[0] = -std::cos(x) / x;
    if (lmax >= 1) y[1] = (-std::cos(x) / x - std::sin(x)) / x;
    for (int l = 1; l < lmax; ++l) {
        y[l + 1] = (2 * l + 1) / x * y[l] - y[l - 1];
        if (!std::isfinite(y[l + 1]))
            throw std::range_error("sph_bessel_y: overflow at l=" + std::to_string(l + 1) +
                                   ", x=" + std::to_string(x));
    }
    return y;
}

inline double sph_bessel_y(int l, double x) { return sph_bessel_y_all(l, x)[l]; }

inline Complex sph_hankel1(int l, double x) {
    return {sph_bessel_j(l, x), sph_bessel_y(l, x)};
}

/// Derivative from f_l' = f_{l-1} - (l+1)/x f_l (valid for j, y, h1).
inline double sph_bessel_j_deriv(int l, double x) {
    const auto j = sph_bessel_j_all(l + 1, x);
    if (l == 0) return -j[1];
    return j[l - 1] - (l + 1) / x * j[l];
}

inline double sph_bessel_y_deriv(int l, double x) {
    const auto y = sph_bessel_y_all(std::max(l, 1), x);
    if (l == 0) return -y[1];
    return y[l - 1] - (l + 1) / x * y[l];
}

inline Complex sph_hankel1_deriv(int l, double x) {
    return {sph_bessel_j_deriv(l, x), sph_bessel_y_deriv(l, x)};
}

/// P_0..P_lmax at t.
inline std::vector<double> legendre_p_all(int lmax, double t) {
    detail::require(lmax >= 0, "legendre_p: negative order");
    detail::require(t >= -1.0 && t <= 1.0, "legendre_p: argument outside [-1,1]");
    std::vector<double> p(lmax + 1);
    p[0] = 1.0;
    if (lmax >= 1) p[1] = t;
    for (int l = 1; l < lmax; ++l)
        p[l + 1] = ((2 * l + 1) * t * p[l] - l * p[l - 1]) / (l + 1);
    return p;
}

inline double legendre_p(int l, double t) { return legendre_p_all(l, t)[l]; }

/// Flattened real spherical-harmonic index, l*l + l + m.
inline int sh_index(int l, int m) { return l * l + l + m; }

/// Values and angular derivatives of all real orthonormal spherical
/// harmonics up to degree lmax at (theta, phi).  Basis convention:
/// Y_{l,0} = Pbar_l^0, Y_{l,+-m} = sqrt(2) Pbar_l^m {cos,sin}(m phi),
/// with Pbar fully normalized and no Condon-Shortley phase.
struct SphHarmValues {
    int lmax = 0;
    std::vector<double> y;       // values, sh_index order
    std::vector<double> dtheta;  // d/dtheta
    std::vector<double> dphi;    // d/dphi
};

inline SphHarmValues eval_real_sph_harm_all(int lmax, double theta, double phi) {
    detail::require(lmax >= 0 && lmax <= kMaxBesselOrder, "real_sph_harm: degree out of range");
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double st_safe = (std::abs(st) < 1e-300) ? 1e-300 : st;
    const int n = (lmax + 1) * (lmax + 1);

    // Fully normalized associated Legendre Pbar_l^m(cos theta), m >= 0.
    auto pidx = [lmax](int l, int m) { return l * (lmax + 1) + m; };
    std::vector<double> pbar((lmax + 1) * (lmax + 1), 0.0);
    pbar[pidx(0, 0)] = std::sqrt(1.0 / (4.0 * kPi));
    for (int m = 1; m <= lmax; ++m)
        pbar[pidx(m, m)] = pbar[pidx(m - 1, m - 1)] * st * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    for (int m = 0; m < lmax; ++m)
        pbar[pidx(m + 1, m)] = ct * std::sqrt(2.0 * m + 3.0) * pbar[pidx(m, m)];
    for (int m = 0; m <= lmax; ++m)
        for (int l = m + 2; l <= lmax; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - m * m) /
                                       (4.0 * static_cast<double>(l - 1) * (l - 1) - 1.0));
            pbar[pidx(l, m)] = a * (ct * pbar[pidx(l - 1, m)] - b * pbar[pidx(l - 2, m)]);
        }

    // d Pbar_l^m / d theta = (l ct Pbar_l^m - sqrt((2l+1)(l^2-m^2)/(2l-1)) Pbar_{l-1}^m) / st
    std::vector<double> dpbar((lmax + 1) * (lmax + 1), 0.0);
    for (int m = 0; m <= lmax; ++m)
        for (int l = m; l <= lmax; ++l) {
            double below = 0.0;
            if (l > m)
                below = std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - m * m) /
                                  (2.0 * l - 1.0)) * pbar[pidx(l - 1, m)];
            dpbar[pidx(l, m)] = (l * ct * pbar[pidx(l, m)] - below) / st_safe;
        }

    SphHarmValues out;
    out.lmax = lmax;
    out.y.assign(n, 0.0);
    out.dtheta.assign(n, 0.0);
    out.dphi.assign(n, 0.0);
    const double sq2 = std::sqrt(2.0);
    for (int l = 0; l <= lmax; ++l) {
        out.y[sh_index(l, 0)] = pbar[pidx(l, 0)];
        out.dtheta[sh_index(l, 0)] = dpbar[pidx(l, 0)];
        for (int m = 1; m <= l; ++m) {
            const double c = std::cos(m * phi), s = std::sin(m * phi);
            const double p = pbar[pidx(l, m)], dp = dpbar[pidx(l, m)];
            out.y[sh_index(l, m)] = sq2 * p * c;
            out.y[sh_index(l, -m)] = sq2 * p * s;
            out.dtheta[sh_index(l, m)] = sq2 * dp * c;
            out.dtheta[sh_index(l, -m)] = sq2 * dp * s;
            out.dphi[sh_index(l, m)] = -m * sq2 * p * s;
            out.dphi[sh_index(l, -m)] = m * sq2 * p * c;
        }
    }
    return out;
}

inline double real_sph_harm(int l, int m, double theta, double phi) {
    detail::require(std::abs(m) <= l, "real_sph_harm: |m| > l");
    return eval_real_sph_harm_all(l, theta, phi).y[sh_index(l, m)];
}

/// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
    detail::require(n >= 1, "gauss_legendre: n < 1");
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int l = 1; l < n; ++l) {
                const double p2 = ((2 * l + 1) * x * p1 - l * p0) / (l + 1);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        gl.nodes[n - 1 - i] = x;
        gl.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return gl;
}

} // namespace obscat
